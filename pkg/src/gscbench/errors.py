"""Error types shared across the package.

Every raised error carries a short machine-readable ``code`` so that the CLI
and the teleop server can report failures uniformly.
"""


class CodedError(ValueError):
    """ValueError with a stable string code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
