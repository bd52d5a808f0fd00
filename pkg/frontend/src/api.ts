/**
 * Typed client for the consent-management REST API.
 *
 * Every call the UI makes goes through this module, which keeps the
 * "documented endpoints only" contract testable: the test suite swaps in a
 * recording fetch and checks each request against the endpoint list.
 */

export type Role = "user" | "company" | "admin";

export interface Flags {
  name: boolean;
  email: boolean;
  phone: boolean;
  location: boolean;
}

export const FLAG_NAMES: readonly (keyof Flags)[] = [
  "name",
  "email",
  "phone",
  "location",
];

export const ALL_OFF: Flags = {
  name: false,
  email: false,
  phone: false,
  location: false,
};

export interface Company {
  companyId: string;
  name: string;
  description: string;
  contactEmail: string;
  accredited: boolean;
}

export interface PermissionEntry {
  companyId: string;
  companyName: string;
  flags: Flags;
}

/** One row of the company dashboard; carries a pair key, never a user id. */
export interface DataRow {
  pairKey: string;
  deleted: boolean;
  name?: string;
  email?: string;
  phone?: string;
  location?: string;
}

export interface SessionInfo {
  token: string;
  role: Role;
  principalId: string;
  profileComplete?: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: any = {};
    try {
      payload = await response.json();
    } catch {
      payload = {};
    }
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? "error",
        payload.message ?? `request failed with ${response.status}`,
      );
    }
    return payload as T;
  }

  registerUser(fields: {
    name: string;
    email: string;
    phone: string;
    location: string;
    password: string;
  }): Promise<{ userId: string }> {
    return this.request("POST", "/api/users", fields);
  }

  registerCompany(fields: {
    name: string;
    password: string;
  }): Promise<{ companyId: string }> {
    return this.request("POST", "/api/companies", fields);
  }

  async login(principal: string, password: string): Promise<SessionInfo> {
    const session = await this.request<SessionInfo>("POST", "/api/sessions", {
      principal,
      password,
    });
    this.token = session.token;
    return session;
  }

  listCompanies(): Promise<Company[]> {
    return this.request("GET", "/api/companies");
  }

  listPermissions(): Promise<PermissionEntry[]> {
    return this.request("GET", "/api/permissions");
  }

  putPermission(companyId: string, flags: Flags): Promise<{ pairKey: string }> {
    // The API rejects partial bodies; always send the complete flag set.
    return this.request("PUT", `/api/permissions/${companyId}`, { ...flags });
  }

  putProfile(description: string, contactEmail: string): Promise<unknown> {
    return this.request("PUT", "/api/companies/me/profile", {
      description,
      contactEmail,
    });
  }

  companyData(): Promise<DataRow[]> {
    return this.request("GET", "/api/company/data");
  }

  deleteAccount(confirm: string): Promise<{ deleted: boolean }> {
    return this.request("DELETE", "/api/users/me", { confirm });
  }

  accredit(companyId: string, accredited: boolean): Promise<unknown> {
    return this.request("POST", `/api/admin/companies/${companyId}/accredit`, {
      accredited,
    });
  }
}
