"""Built-in benchmark configurations, table rows and the ``a/eps + b ln eps + c`` fit.

Every configuration is a unit-disk head with two necks whose windows sit at
angles 0 and pi/2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import solve_asymptotic
from .geometry import ProblemSpec, ValidationError, ValidationReport
from .neumann import NeumannKernel

__all__ = [
    "PERPENDICULAR",
    "LENGTH_PAIRS",
    "EPS_PAIRS",
    "EPS_SWEEP",
    "perpendicular_disk",
    "configurations",
    "table_rows",
    "FitResult",
    "RankDeficientFitError",
    "fit_series",
    "FIT_EXPECTED",
]

PERPENDICULAR = (0.0, math.pi / 2.0)

#: (L1, L2) pairs at eps = 0.01
LENGTH_PAIRS = [(1, 1), (1, 1.5), (1, 2), (1, 2.5), (2, 1.5), (2.5, 2), (3, 2.5), (4, 3)]
#: (eps1, eps2) pairs at L1 = 1, L2 = 2
EPS_PAIRS = [
    (0.028, 0.028),
    (0.025, 0.025),
    (0.022, 0.022),
    (0.019, 0.019),
    (0.016, 0.016),
    (0.013, 0.013),
    (0.010, 0.010),
    (0.010, 0.050),
    (0.010, 0.030),
    (0.010, 0.020),
]
#: equal necks of length 2
EPS_SWEEP = [0.10, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01]

#: exact ``(a, b, c)`` for equal perpendicular necks of length 2 on the unit disk
FIT_EXPECTED = (math.pi / 2.0, -0.5, 3.0 - 0.75 * math.log(2.0))


def perpendicular_disk(eps1, eps2, L1, L2):
    return ProblemSpec.disk(PERPENDICULAR, [eps1, eps2], [L1, L2])


def configurations(which):
    """``[(params, spec)]`` for ``which`` in ``{"L", "eps", "fit"}``."""
    if which == "L":
        return [({"L1": L1, "L2": L2}, perpendicular_disk(0.01, 0.01, L1, L2)) for L1, L2 in LENGTH_PAIRS]
    if which == "eps":
        return [({"eps1": e1, "eps2": e2}, perpendicular_disk(e1, e2, 1, 2)) for e1, e2 in EPS_PAIRS]
    if which == "fit":
        return [({"eps": e}, perpendicular_disk(e, e, 2, 2)) for e in EPS_SWEEP]
    raise ValueError(f"unknown table {which!r}; expected L, eps or fit")


def table_rows(which, bie=True, mc=None, resolution=None):
    """Rows of ``params, u_asym[, u_bie, rel_err][, u_mc, mc_stderr]`` at the disk center.

    ``mc`` is either ``None`` or a dict of keyword arguments for
    :func:`narrowescape.montecarlo.simulate`.
    """
    from .robin_bie import solve_robin

    kernel = None
    rows = []
    origin = (0.0, 0.0)
    for params, spec in configurations(which):
        kernel = kernel or NeumannKernel(spec.head)
        row = dict(params)
        row["u_asym"] = float(solve_asymptotic(spec, kernel).u(origin))
        if bie:
            kw = {} if resolution is None else {"resolution": resolution}
            u_bie = float(solve_robin(spec, kernel, **kw).u(origin))
            row["u_bie"] = u_bie
            row["rel_err"] = abs(u_bie - row["u_asym"]) / abs(u_bie)
        if mc is not None:
            from .montecarlo import simulate

            stats = simulate(spec, origin, **mc)
            row["u_mc"] = stats.mean_fpt
            row["mc_stderr"] = stats.stderr
        rows.append(row)
    return rows


class RankDeficientFitError(np.linalg.LinAlgError):
    pass


@dataclass
class FitResult:
    a: float
    b: float
    c: float
    residual: float

    def to_record(self):
        return {"a": self.a, "b": self.b, "c": self.c, "residual": self.residual}


def fit_series(eps, values):
    """Least-squares fit of ``values ~ a/eps + b ln(eps) + c``.

    Parameters
    ----------
    eps, values : array_like
        At least four distinct positive ``eps``.

    Returns
    -------
    FitResult
        Coefficients and the 2-norm of the residual.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.shape != values.shape or eps.ndim != 1:
        raise ValueError("eps and values must be 1-D arrays of equal length")
    if np.any(eps <= 0):
        raise ValidationError(ValidationReport(False, ["eps values must be positive"], []))
    if np.unique(eps).size < 4:
        raise ValidationError(ValidationReport(False, ["fit needs at least 4 distinct eps values"], []))
    A = np.stack([1.0 / eps, np.log(eps), np.ones_like(eps)], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(A, values, rcond=None)
    if rank < 3:
        raise RankDeficientFitError("fit design matrix is rank deficient")
    res = float(np.linalg.norm(A @ coef - values))
    return FitResult(float(coef[0]), float(coef[1]), float(coef[2]), res)
