"""Input validation helpers shared by the estimators and the CLI."""

from mpmath import mpf

from ._mp import to_mpf
from .exceptions import DomainValidationError


def check_grid(x_grid, min_points=1):
    """Return the grid as mpf values; it must be strictly increasing and positive."""
    xs = [to_mpf(x) for x in x_grid]
    if len(xs) < min_points:
        raise DomainValidationError(f"grid needs at least {min_points} points, got {len(xs)}")
    if any(x <= 0 for x in xs):
        raise DomainValidationError("grid points must be positive")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainValidationError("grid must be strictly increasing")
    return xs


def check_nu_window_range(nu):
    nu = to_mpf(nu)
    if not 0 < nu < mpf(1) / 2:
        raise DomainValidationError(f"nu must lie in (0, 1/2), got {nu}")
    return nu


def check_positive(name, value):
    v = to_mpf(value)
    if v <= 0:
        raise DomainValidationError(f"{name} must be positive, got {value}")
    return v


def parse_grid_spec(spec):
    """Parse ``lo:hi:geomN`` or ``lo:hi:linN`` into a list of decimal strings.

    Endpoints are kept as the user wrote them; interior points are
    computed at the current precision.
    """
    parts = spec.split(":")
    if len(parts) != 3:
        raise DomainValidationError(f"grid spec {spec!r} must look like lo:hi:geomN or lo:hi:linN")
    lo, hi, kind = parts
    lo_v, hi_v = check_positive("grid lo", lo), check_positive("grid hi", hi)
    if hi_v <= lo_v:
        raise DomainValidationError("grid hi must exceed lo")
    for prefix in ("geom", "lin"):
        if kind.startswith(prefix):
            try:
                n = int(kind[len(prefix):])
            except ValueError:
                break
            if n < 2:
                raise DomainValidationError("grid needs at least 2 points")
            if prefix == "geom":
                ratio = (hi_v / lo_v) ** (mpf(1) / (n - 1))
                pts = [lo_v * ratio**k for k in range(n)]
            else:
                step = (hi_v - lo_v) / (n - 1)
                pts = [lo_v + step * k for k in range(n)]
            pts[0], pts[-1] = to_mpf(lo), to_mpf(hi)
            return pts
    raise DomainValidationError(f"grid kind {kind!r} must be geomN or linN")
