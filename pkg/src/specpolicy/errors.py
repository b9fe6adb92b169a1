"""Error types shared across the package."""


class SpecPolicyError(Exception):
    """Contract violation carrying a stable error code.

    Codes are part of the external contract (the CLI maps them onto its
    exit-code taxonomy), so callers may dispatch on ``err.code``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
