/**
 * Screen builders. Each returns a detached element wired with handlers;
 * the app swaps them into the root. No screen keeps state of its own —
 * everything rendered comes from the API responses passed in.
 */

import {
  ALL_OFF,
  Company,
  DataRow,
  FLAG_NAMES,
  Flags,
  PermissionEntry,
} from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function labeledInput(
  id: string,
  label: string,
  type = "text",
): { wrap: HTMLElement; input: HTMLInputElement } {
  const wrap = el("div", { class: "field" });
  const lab = el("label", { for: id }, label);
  const input = el("input", { id, type }) as HTMLInputElement;
  wrap.append(lab, input);
  return { wrap, input };
}

export interface LoginHandlers {
  onLogin(principal: string, password: string): void;
  onShowRegisterUser(): void;
  onShowRegisterCompany(): void;
}

export function buildLogin(handlers: LoginHandlers): HTMLElement {
  const section = el("section", { id: "login-view" });
  section.append(el("h1", {}, "Sign in"));
  const principal = labeledInput("principal", "Email or company name");
  const password = labeledInput("password", "Password", "password");
  const button = el("button", { id: "login-button" }, "Sign in");
  button.addEventListener("click", () =>
    handlers.onLogin(principal.input.value, password.input.value),
  );
  const userLink = el("button", { id: "show-register-user", class: "link" },
    "Create a user account");
  userLink.addEventListener("click", handlers.onShowRegisterUser);
  const companyLink = el("button", { id: "show-register-company", class: "link" },
    "Register a company");
  companyLink.addEventListener("click", handlers.onShowRegisterCompany);
  section.append(principal.wrap, password.wrap, button, userLink, companyLink);
  return section;
}

export function buildRegisterUser(
  onSubmit: (fields: {
    name: string;
    email: string;
    phone: string;
    location: string;
    password: string;
  }) => void,
  onBack: () => void,
): HTMLElement {
  const section = el("section", { id: "register-user-view" });
  section.append(el("h1", {}, "Create your account"));
  const name = labeledInput("reg-name", "Full name");
  const email = labeledInput("reg-email", "Email");
  const phone = labeledInput("reg-phone", "Phone");
  const location = labeledInput("reg-location", "Location");
  const password = labeledInput("reg-password", "Password", "password");
  const button = el("button", { id: "register-user-button" }, "Register");
  button.addEventListener("click", () =>
    onSubmit({
      name: name.input.value,
      email: email.input.value,
      phone: phone.input.value,
      location: location.input.value,
      password: password.input.value,
    }),
  );
  const back = el("button", { class: "link", id: "back-to-login" }, "Back");
  back.addEventListener("click", onBack);
  section.append(name.wrap, email.wrap, phone.wrap, location.wrap,
    password.wrap, button, back);
  return section;
}

export function buildRegisterCompany(
  onSubmit: (fields: { name: string; password: string }) => void,
  onBack: () => void,
): HTMLElement {
  const section = el("section", { id: "register-company-view" });
  section.append(el("h1", {}, "Register your company"));
  const name = labeledInput("reg-company-name", "Company name");
  const password = labeledInput("reg-company-password", "Password", "password");
  const button = el("button", { id: "register-company-button" }, "Register");
  button.addEventListener("click", () =>
    onSubmit({ name: name.input.value, password: password.input.value }),
  );
  const back = el("button", { class: "link", id: "back-to-login" }, "Back");
  back.addEventListener("click", onBack);
  section.append(name.wrap, password.wrap, button, back);
  return section;
}

export interface ConsentHandlers {
  onSave(companyId: string, flags: Flags): void;
  onOpenSettings(): void;
  onLogout(): void;
}

/**
 * The user's consent screen: one card per accredited company with the four
 * toggles, pre-set from the latest committed server state.
 */
export function buildUserHome(
  companies: Company[],
  permissions: PermissionEntry[],
  handlers: ConsentHandlers,
): HTMLElement {
  const section = el("section", { id: "user-home-view" });
  const header = el("header", {});
  header.append(el("h1", {}, "Your consent settings"));
  const settings = el("button", { id: "settings-link", class: "link" }, "Account settings");
  settings.addEventListener("click", handlers.onOpenSettings);
  const logout = el("button", { id: "logout-link", class: "link" }, "Sign out");
  logout.addEventListener("click", handlers.onLogout);
  header.append(settings, logout);
  section.append(header);

  const byCompany = new Map(permissions.map((p) => [p.companyId, p.flags]));
  const list = el("div", { id: "company-list" });
  if (companies.length === 0) {
    list.append(el("p", { id: "no-companies" }, "No accredited companies yet."));
  }
  for (const company of companies) {
    const card = el("div", { class: "company-card", "data-company": company.companyId });
    card.append(el("h2", { class: "company-name" }, company.name));
    if (company.description) {
      card.append(el("p", { class: "company-description" }, company.description));
    }
    const current = byCompany.get(company.companyId) ?? ALL_OFF;
    const toggles: Partial<Record<keyof Flags, HTMLInputElement>> = {};
    for (const flag of FLAG_NAMES) {
      const row = el("div", { class: "flag-row" });
      const input = el("input", {
        type: "checkbox",
        class: "flag-toggle",
        "data-flag": flag,
        "data-company": company.companyId,
      }) as HTMLInputElement;
      input.checked = current[flag];
      toggles[flag] = input;
      const label = el("label", {}, `share ${flag}`);
      row.append(input, label);
      card.append(row);
    }
    const save = el("button", { class: "save-permissions" }, "Save");
    save.addEventListener("click", () => {
      // Disable the whole card while the write is in flight so two saves
      // cannot interleave.
      save.disabled = true;
      for (const input of Object.values(toggles)) input!.disabled = true;
      handlers.onSave(company.companyId, {
        name: toggles.name!.checked,
        email: toggles.email!.checked,
        phone: toggles.phone!.checked,
        location: toggles.location!.checked,
      });
    });
    card.append(save);
    list.append(card);
  }
  section.append(list);
  return section;
}

/** Settings screen with the typed-confirmation account deletion. */
export function buildSettings(
  onConfirmDelete: () => void,
  onBack: () => void,
): HTMLElement {
  const section = el("section", { id: "settings-view" });
  section.append(el("h1", {}, "Account settings"));
  const warning = el(
    "p",
    { id: "delete-warning" },
    "Deleting your account revokes every permission you have granted and " +
      "erases your stored information. This cannot be undone. " +
      'Type DELETE to confirm.',
  );
  const input = el("input", { id: "confirm-input", type: "text" }) as HTMLInputElement;
  const button = el("button", { id: "confirm-delete" }, "Delete my account") as HTMLButtonElement;
  button.disabled = true;
  input.addEventListener("input", () => {
    button.disabled = input.value !== "DELETE";
  });
  button.addEventListener("click", () => {
    if (input.value === "DELETE") {
      button.disabled = true;
      onConfirmDelete();
    }
  });
  const back = el("button", { class: "link", id: "back-to-home" }, "Back");
  back.addEventListener("click", onBack);
  section.append(warning, input, button, back);
  return section;
}

export function buildCompanyProfileForm(
  onSubmit: (description: string, contactEmail: string) => void,
): HTMLElement {
  const section = el("section", { id: "company-profile-view" });
  section.append(el("h1", {}, "Complete your company profile"));
  section.append(el("p", {},
    "Your profile is published to users browsing the company list."));
  const description = labeledInput("description", "Description");
  const contact = labeledInput("contact-email", "Contact email");
  const button = el("button", { id: "profile-save" }, "Publish profile");
  button.addEventListener("click", () =>
    onSubmit(description.input.value, contact.input.value),
  );
  section.append(description.wrap, contact.wrap, button);
  return section;
}

/**
 * Company dashboard: one row per permission entry, identified by pair key.
 * Deleted entries render visually distinct with no data cells — the signal
 * that the subject must be purged downstream.
 */
export function buildCompanyDashboard(
  rows: DataRow[],
  onLogout: () => void,
): HTMLElement {
  const section = el("section", { id: "company-home-view" });
  const header = el("header", {});
  header.append(el("h1", {}, "Data shared with you"));
  const logout = el("button", { id: "logout-link", class: "link" }, "Sign out");
  logout.addEventListener("click", onLogout);
  header.append(logout);
  section.append(header);

  if (rows.length === 0) {
    section.append(el("p", { id: "empty-state" },
      "No permission entries yet. Users will appear here once they grant you access."));
    return section;
  }
  const table = el("table", { id: "data-table" });
  const head = el("tr", {});
  for (const title of ["pair key", "status", ...FLAG_NAMES]) {
    head.append(el("th", {}, title));
  }
  table.append(head);
  for (const row of rows) {
    const tr = el("tr", {
      class: row.deleted ? "data-row row-deleted" : "data-row",
      "data-pair-key": row.pairKey,
    });
    tr.append(el("td", { class: "pair-key" }, row.pairKey));
    if (row.deleted) {
      const note = el("td", { class: "deleted-note" },
        "entry deleted — remove any data you hold for this pair key");
      note.setAttribute("colspan", String(FLAG_NAMES.length + 1));
      tr.append(note);
    } else {
      tr.append(el("td", { class: "status" }, "active"));
      for (const flag of FLAG_NAMES) {
        const value = row[flag];
        tr.append(el("td", { class: `field-${flag}` }, value ?? "—"));
      }
    }
    table.append(tr);
  }
  section.append(table);
  return section;
}

export function buildAdminNote(onLogout: () => void): HTMLElement {
  const section = el("section", { id: "admin-view" });
  section.append(el("h1", {}, "Administrator"));
  section.append(el("p", {},
    "Accreditation is managed through the API and audit tooling, not this UI."));
  const logout = el("button", { id: "logout-link", class: "link" }, "Sign out");
  logout.addEventListener("click", onLogout);
  section.append(logout);
  return section;
}
