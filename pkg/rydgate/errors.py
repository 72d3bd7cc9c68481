class RydgateError(Exception):
    """Base class for all simulator errors."""


class ValidityError(RydgateError, ValueError):
    """A physical validity limit was violated (e.g. R below the Le Roy radius)."""


class IntegratorFailure(RydgateError, RuntimeError):
    """Propagation produced non-finite amplitudes."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time * 1e6:.6f} us)")
        self.time = time


class ConfigError(RydgateError, ValueError):
    """Run file failed schema validation."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        self.diagnostics = diagnostics or []
        details = "\n".join(f"  - {d}" for d in self.diagnostics)
        super().__init__(f"{message}\n{details}" if details else message)
