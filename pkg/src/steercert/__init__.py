"""Fidelity certificates for one-sided self-testing from steering inequalities.

Modules:
    qmat: small dense linear-algebra helpers.
    model: inequality families, bounds and ideal strategies.
    certify_analytic: extraction-channel certificates F >= s S + tau.
    sos: sum-of-squares identities, self-testing relations, SWAP isometry.
    certify_sdp: moment-matrix SDP lower bounds on the SWAP fidelity.
    sampling: testing games and sample-size planning.
    cli: the ``steercert`` command.
"""

from .model import (BobSettings, Family, InvalidParameters, SteeringInequality, lhs_bound,
                    quantum_bound, target_state, target_theta)

__all__ = ["BobSettings", "Family", "InvalidParameters", "SteeringInequality", "lhs_bound",
           "quantum_bound", "target_state", "target_theta"]
__version__ = "0.1.0"
