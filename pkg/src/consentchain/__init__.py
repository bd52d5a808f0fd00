"""Consent management on a small permissioned ledger.

Permission grants live as anonymized assets on a hash-chained, replicated
ledger; the personal data they refer to lives in a separate, deletable
document store. A REST gateway ties the two together and an audit CLI
verifies the privacy properties against the persisted files.
"""

__version__ = "0.1.0"
