import json

import pytest

from consentchain.gateway import AppConfig, build_app


class Client:
    """Thin JSON convenience wrapper over Gateway.handle for tests."""

    def __init__(self, gateway):
        self.gateway = gateway

    def request(self, method, path, body=None, token=None):
        headers = {}
        if token:
            headers["authorization"] = f"Bearer {token}"
        raw = json.dumps(body).encode() if body is not None else b""
        response = self.gateway.handle(method, path, headers, raw)
        return response.status, response.json()

    # -- common flows ---------------------------------------------------------

    def register_user(self, email, name="Alice Example", phone="555-0100",
                      location="Oshawa", password="pw-user"):
        status, payload = self.request("POST", "/api/users", {
            "name": name, "email": email, "phone": phone,
            "location": location, "password": password,
        })
        assert status == 201, payload
        return payload["userId"]

    def register_company(self, name, password="pw-co"):
        status, payload = self.request("POST", "/api/companies",
                                       {"name": name, "password": password})
        assert status == 201, payload
        return payload["companyId"]

    def login(self, principal, password):
        status, payload = self.request("POST", "/api/sessions",
                                       {"principal": principal, "password": password})
        assert status == 200, payload
        return payload

    def token(self, principal, password):
        return self.login(principal, password)["token"]

    def put_profile(self, token, description="what we do", contact="contact@co.test"):
        status, payload = self.request(
            "PUT", "/api/companies/me/profile",
            {"description": description, "contactEmail": contact}, token=token)
        assert status == 200, payload
        return payload

    def accredit(self, admin_token, company_id, accredited=True):
        status, payload = self.request(
            "POST", f"/api/admin/companies/{company_id}/accredit",
            {"accredited": accredited}, token=admin_token)
        assert status == 200, payload
        return payload

    def grant(self, user_token, company_id, **flags):
        body = {"name": False, "email": False, "phone": False, "location": False}
        body.update(flags)
        status, payload = self.request(
            "PUT", f"/api/permissions/{company_id}", body, token=user_token)
        assert status == 200, payload
        return payload["pairKey"]

    def ready_company(self, name, admin_token, password="pw-co"):
        """Register + profile + accreditation in one go; returns companyId."""
        company_id = self.register_company(name, password)
        token = self.token(name, password)
        self.put_profile(token)
        self.accredit(admin_token, company_id)
        return company_id


@pytest.fixture
def app(tmp_path):
    return build_app(AppConfig(
        data_dir=tmp_path / "data",
        peers=2,
        seed=7,
        password_iterations=4,
        admin_id="admin",
        admin_password="admin-pw",
    ))


@pytest.fixture
def client(app):
    return Client(app)


@pytest.fixture
def admin_token(client):
    return client.token("admin", "admin-pw")
