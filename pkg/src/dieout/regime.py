"""Sharp-threshold classification of the epidemic regime.

The curing rate delta is compared against a spectral threshold built
from the asymptotic infectiousness and the locality graph.  Above the
threshold the mean extinction time is logarithmic in the initial
epidemic size; below it the mean extinction time is infinite.  Exactly
at the threshold nothing is claimed, so the classifiers report
``INDETERMINATE`` inside a small relative boundary band instead of
guessing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .graphs import (DiagonalModulation, LocalityGraph, effective_matrix,
                     geometric_lower, is_strongly_connected, spectral_radius,
                     symmetrized_upper)

#: Relative half-width of the indeterminate band around the threshold.
BOUNDARY_TOL = 1e-9


class Regime(enum.Enum):
    FAST_EXTINCTION = "fast_extinction"
    LONG_LASTING = "long_lasting"
    INDETERMINATE = "indeterminate"


class Method(enum.Enum):
    SYMMETRIC_SPECTRAL = "symmetric_spectral"
    GENERAL_SPECTRAL = "general_spectral"
    SCALAR_D = "scalar_d"
    DECOUPLED_WEYL = "decoupled_weyl"


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of a threshold classification.

    ``margin`` is delta minus the threshold that decided the regime.
    For the decoupled method the decision uses the upper threshold for
    fast extinction and the lower one for a long-lasting epidemic;
    both appear in ``lower_threshold``/``upper_threshold``.
    ``strongly_connected`` is False when the positivity guarantee
    behind the spectral comparison does not apply.
    """

    regime: Regime
    threshold: float
    delta: float
    margin: float
    method: Method
    lower_threshold: float | None = None
    upper_threshold: float | None = None
    strongly_connected: bool | None = None

    def as_record(self) -> dict:
        """Flat key-value form for JSON emission."""
        rec = {
            "method": self.method.value,
            "regime": self.regime.value,
            "threshold": self.threshold,
            "delta": self.delta,
            "margin": self.margin,
        }
        if self.method is Method.DECOUPLED_WEYL:
            rec["lower_threshold"] = self.lower_threshold
            rec["upper_threshold"] = self.upper_threshold
        if self.strongly_connected is not None:
            rec["strongly_connected"] = self.strongly_connected
        return rec


def _decide(delta: float, threshold: float, tol: float) -> tuple[Regime, float]:
    margin = delta - threshold
    scale = max(delta, threshold)
    if abs(margin) <= tol * scale:
        return Regime.INDETERMINATE, margin
    return (Regime.FAST_EXTINCTION if margin > 0
            else Regime.LONG_LASTING), margin


def _check_inputs(beta_inf: float, betaint_inf: float, delta: float):
    if beta_inf < 0 or betaint_inf < 0:
        raise ValueError("asymptotic rates must be nonnegative")
    if delta <= 0:
        raise ValueError("curing rate must be positive")


def classify_symmetric(lambda_r: float, beta_inf: float, betaint_inf: float,
                       delta: float,
                       boundary_tol: float = BOUNDARY_TOL) -> RegimeReport:
    """Classify via the symmetric-graph threshold beta_inf*lambda_r + betaint_inf.

    Args:
        lambda_r: spectral radius of the (symmetric) adjacency matrix.
        beta_inf, betaint_inf: asymptotic between- and within-locality
            per-person rates.
        delta: curing rate.
    """
    _check_inputs(beta_inf, betaint_inf, delta)
    if lambda_r < 0:
        raise ValueError("spectral radius must be nonnegative")
    threshold = beta_inf * lambda_r + betaint_inf
    regime, margin = _decide(delta, threshold, boundary_tol)
    return RegimeReport(regime, threshold, delta, margin,
                        Method.SYMMETRIC_SPECTRAL)


def classify_general(g: LocalityGraph, modulation: DiagonalModulation,
                     beta_inf: float, betaint_inf: float, delta: float,
                     boundary_tol: float = BOUNDARY_TOL,
                     spectral_tol: float = 1e-12) -> RegimeReport:
    """Classify via the Perron root of beta_inf*W + betaint_inf*diag(D).

    This is the authoritative (sharp) comparison for weighted directed
    graphs with per-node modulation.  When the graph is not strongly
    connected the root is still computed but the report is flagged,
    since eigenvector positivity is no longer guaranteed.
    """
    _check_inputs(beta_inf, betaint_inf, delta)
    connected = is_strongly_connected(g)
    info = spectral_radius(
        effective_matrix(g, modulation, beta_inf, betaint_inf),
        tol=spectral_tol)
    regime, margin = _decide(delta, info.radius, boundary_tol)
    return RegimeReport(regime, info.radius, delta, margin,
                        Method.GENERAL_SPECTRAL,
                        strongly_connected=connected)


def classify_scalar_D(g: LocalityGraph, eta: float, beta_inf: float,
                      betaint_inf: float, delta: float,
                      boundary_tol: float = BOUNDARY_TOL,
                      spectral_tol: float = 1e-12) -> RegimeReport:
    """Classify with uniform within-locality modulation D = eta * I.

    The threshold decouples exactly into beta_inf*rho(W) + betaint_inf*eta,
    matching :func:`classify_general` with a scalar modulation.
    """
    _check_inputs(beta_inf, betaint_inf, delta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    info = spectral_radius(g.weights, tol=spectral_tol)
    threshold = beta_inf * info.radius + betaint_inf * eta
    regime, margin = _decide(delta, threshold, boundary_tol)
    return RegimeReport(regime, threshold, delta, margin, Method.SCALAR_D,
                        strongly_connected=is_strongly_connected(g))


def classify_decoupled(g: LocalityGraph, modulation: DiagonalModulation,
                       beta_inf: float, betaint_inf: float, delta: float,
                       boundary_tol: float = BOUNDARY_TOL,
                       spectral_tol: float = 1e-12) -> RegimeReport:
    """Classify with graph and modulation contributions decoupled.

    Uses the symmetrization sandwich rho(sqrt(W o W^T)) <= rho(W) <=
    rho((W + W^T)/2) together with the spectral shift bounds for a
    diagonal addition.  The two sides generally leave a gap:

    * delta above ``beta_inf*rho((W+W^T)/2) + betaint_inf*max(D)``
      certifies fast extinction;
    * delta below ``beta_inf*rho(sqrt(W o W^T)) + betaint_inf*min(D)``
      certifies a long-lasting epidemic;
    * in between the method is inconclusive (the sharp comparison in
      :func:`classify_general` may still decide).
    """
    _check_inputs(beta_inf, betaint_inf, delta)
    if len(modulation) != g.node_count:
        raise ValueError("modulation length does not match the graph")
    upper = (beta_inf * spectral_radius(symmetrized_upper(g),
                                        tol=spectral_tol).radius
             + betaint_inf * float(modulation.values.max()))
    lower = (beta_inf * spectral_radius(geometric_lower(g),
                                        tol=spectral_tol).radius
             + betaint_inf * float(modulation.values.min()))
    if delta - upper > boundary_tol * max(delta, upper):
        regime, threshold = Regime.FAST_EXTINCTION, upper
    elif lower - delta > boundary_tol * max(delta, lower):
        regime, threshold = Regime.LONG_LASTING, lower
    else:
        regime, threshold = Regime.INDETERMINATE, upper
    return RegimeReport(regime, threshold, delta, delta - threshold,
                        Method.DECOUPLED_WEYL,
                        lower_threshold=lower, upper_threshold=upper,
                        strongly_connected=is_strongly_connected(g))
