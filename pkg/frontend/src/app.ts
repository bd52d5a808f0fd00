/**
 * Screen state machine. Holds the session and the current screen, fetches
 * what each screen needs from the API, and re-renders from those responses
 * alone. Session storage is cleared on logout and on account deletion.
 */

import { ApiClient, ApiError, Flags, SessionInfo } from "./api.js";
import {
  buildAdminNote,
  buildCompanyDashboard,
  buildCompanyProfileForm,
  buildLogin,
  buildRegisterCompany,
  buildRegisterUser,
  buildSettings,
  buildUserHome,
} from "./views.js";

export type Screen =
  | "login"
  | "register-user"
  | "register-company"
  | "user-home"
  | "settings"
  | "company-profile"
  | "company-home"
  | "admin-home";

const SESSION_KEY = "consent-session";

export class App {
  session: SessionInfo | null = null;
  screen: Screen = "login";
  notice = "";
  error = "";

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly storage: Storage,
  ) {}

  async start(): Promise<void> {
    const stored = this.storage.getItem(SESSION_KEY);
    if (stored) {
      try {
        this.session = JSON.parse(stored) as SessionInfo;
        this.api.token = this.session.token;
        this.screen = this.homeScreen();
      } catch {
        this.storage.removeItem(SESSION_KEY);
      }
    }
    await this.render();
  }

  private homeScreen(): Screen {
    if (!this.session) return "login";
    if (this.session.role === "admin") return "admin-home";
    if (this.session.role === "company") {
      return this.session.profileComplete ? "company-home" : "company-profile";
    }
    return "user-home";
  }

  private setSession(session: SessionInfo | null): void {
    this.session = session;
    this.api.token = session?.token ?? null;
    if (session) {
      this.storage.setItem(SESSION_KEY, JSON.stringify(session));
    } else {
      // Wipes everything client-side: nothing may survive logout/delete.
      this.storage.clear();
    }
  }

  async goto(screen: Screen): Promise<void> {
    this.screen = screen;
    await this.render();
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    try {
      this.error = "";
      await action();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401 && this.screen !== "login") {
        this.setSession(null);
        this.notice = "Session expired; sign in again.";
        await this.goto("login");
        return;
      }
      this.error = err instanceof ApiError ? err.message : "request failed";
      await this.render();
    }
  }

  // -- flows ----------------------------------------------------------------

  async login(principal: string, password: string): Promise<void> {
    await this.guard(async () => {
      const session = await this.api.login(principal, password);
      this.setSession(session);
      this.notice = "";
      await this.goto(this.homeScreen());
    });
  }

  logout(): void {
    this.setSession(null);
    this.notice = "Signed out.";
    void this.goto("login");
  }

  async registerUser(fields: {
    name: string;
    email: string;
    phone: string;
    location: string;
    password: string;
  }): Promise<void> {
    await this.guard(async () => {
      await this.api.registerUser(fields);
      const session = await this.api.login(fields.email, fields.password);
      this.setSession(session);
      await this.goto("user-home");
    });
  }

  async registerCompany(fields: { name: string; password: string }): Promise<void> {
    await this.guard(async () => {
      await this.api.registerCompany(fields);
      const session = await this.api.login(fields.name, fields.password);
      this.setSession(session);
      await this.goto("company-profile");
    });
  }

  async savePermissions(companyId: string, flags: Flags): Promise<void> {
    await this.guard(async () => {
      try {
        await this.api.putPermission(companyId, flags);
      } finally {
        // Success or failure, the toggles must end up showing committed
        // server state, so the screen is rebuilt from a fresh fetch.
        await this.render();
      }
    });
  }

  async submitProfile(description: string, contactEmail: string): Promise<void> {
    await this.guard(async () => {
      await this.api.putProfile(description, contactEmail);
      if (this.session) {
        this.setSession({ ...this.session, profileComplete: true });
      }
      await this.goto("company-home");
    });
  }

  async deleteAccount(): Promise<void> {
    await this.guard(async () => {
      await this.api.deleteAccount("DELETE");
      this.setSession(null);
      this.notice = "Your account and stored information were deleted.";
      await this.goto("login");
    });
  }

  // -- rendering --------------------------------------------------------------

  async render(): Promise<void> {
    const frame = document.createElement("div");
    frame.id = "frame";
    if (this.notice) {
      const banner = document.createElement("p");
      banner.id = "notice-banner";
      banner.textContent = this.notice;
      frame.append(banner);
    }
    if (this.error) {
      const banner = document.createElement("p");
      banner.id = "error-banner";
      banner.className = "error";
      banner.textContent = this.error;
      frame.append(banner);
    }
    frame.append(await this.buildScreen());
    this.root.replaceChildren(frame);
  }

  private async buildScreen(): Promise<HTMLElement> {
    switch (this.screen) {
      case "login":
        return buildLogin({
          onLogin: (principal, password) => void this.login(principal, password),
          onShowRegisterUser: () => void this.goto("register-user"),
          onShowRegisterCompany: () => void this.goto("register-company"),
        });
      case "register-user":
        return buildRegisterUser(
          (fields) => void this.registerUser(fields),
          () => void this.goto("login"),
        );
      case "register-company":
        return buildRegisterCompany(
          (fields) => void this.registerCompany(fields),
          () => void this.goto("login"),
        );
      case "user-home": {
        const [companies, permissions] = await Promise.all([
          this.api.listCompanies(),
          this.api.listPermissions(),
        ]);
        return buildUserHome(companies, permissions, {
          onSave: (companyId, flags) => void this.savePermissions(companyId, flags),
          onOpenSettings: () => void this.goto("settings"),
          onLogout: () => this.logout(),
        });
      }
      case "settings":
        return buildSettings(
          () => void this.deleteAccount(),
          () => void this.goto("user-home"),
        );
      case "company-profile":
        return buildCompanyProfileForm(
          (description, contactEmail) =>
            void this.submitProfile(description, contactEmail),
        );
      case "company-home": {
        const rows = await this.api.companyData();
        return buildCompanyDashboard(rows, () => this.logout());
      }
      case "admin-home":
        return buildAdminNote(() => this.logout());
    }
  }
}
