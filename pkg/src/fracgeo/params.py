"""Parameter triple (n, s, p) and its validity ranges."""

from dataclasses import dataclass


class ParameterError(ValueError):
    """Raised when (n, s, p) violates a required bound."""


@dataclass(frozen=True)
class Params:
    n: int
    s: float
    p: float

    @property
    def ps(self) -> float:
        return self.p * self.s

    @property
    def kernel_exponent(self) -> float:
        """n + p*s, the exponent of the singular kernel."""
        return self.n + self.p * self.s

    @property
    def projection_range(self) -> bool:
        return 1.0 < self.p < self.n / self.s


def validate_params(n, s, p, need_projection_range=False) -> Params:
    """Check ranges and return a Params.

    With ``need_projection_range`` the strict regime 1 < p < n/s is
    enforced (projection bodies and the affine chains); otherwise p >= 1
    suffices (seminorms only).
    """
    if int(n) != n or int(n) not in (1, 2, 3):
        raise ParameterError(f"n must be 1, 2 or 3 (got {n})")
    n = int(n)
    s = float(s)
    p = float(p)
    if not 0.0 < s < 1.0:
        raise ParameterError(f"s must satisfy 0 < s < 1 (got s={s})")
    if need_projection_range:
        if not p > 1.0:
            raise ParameterError(f"p must satisfy p > 1 (got p={p})")
        if not p < n / s:
            raise ParameterError(
                f"p must satisfy p < n/s = {n / s:g} (got p={p})")
    elif not p >= 1.0:
        raise ParameterError(f"p must satisfy p >= 1 (got p={p})")
    return Params(n, s, p)
