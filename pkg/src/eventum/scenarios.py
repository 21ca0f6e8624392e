"""Named experiment configurations.

``cat``
    projective qubit measurement in the computational basis.
``weak-qubit``
    ``V(1) = diag(cos theta, 1)``, ``V(2) = diag(sin theta, 0)``.
``pointer-Zn``
    pointer on the cyclic group: ``V(y) = exp(-iE) phi((y - X) mod n)``.
``sequential-observable``
    ``V(y) = delta_y(B0) exp(-iE)``: repeated measurement of ``B0`` with free
    evolution ``E`` in between, so successive steps do not commute.

Every scenario starts from ``psi = (3/5, 4/5)`` unless told otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import decode_matrix, decode_scalar, decode_vector
from .dilation import Dilation, canonical_dilation
from .linalg import PAULI_X, PAULI_Y, PAULI_Z, as_state, expm_hermitian
from .reduction import COMPLETENESS_TOL, ReductionFamily, pointer_family, projection_family, validate_completeness
from .strings import StringModel, build_step_unitary

SCENARIOS = ("cat", "weak-qubit", "pointer-Zn", "sequential-observable")
DEFAULT_PSI = np.array([3 / 5, 4 / 5], dtype=complex)

_DEFAULTS = {
    "cat": {},
    "weak-qubit": {"theta": np.pi / 6},
    "pointer-Zn": {
        "X": np.diag([0.0, 1.0]),
        "phi": np.array([2.0, 1.0]) / np.sqrt(5.0),
        "E": 0.3 * PAULI_Y,
    },
    "sequential-observable": {"B0": PAULI_Z, "E": (np.pi / 4) * PAULI_X},
}
_KNOWN = {name: set(p) | {"psi", "horizon", "steps"} for name, p in _DEFAULTS.items()}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    family: ReductionFamily
    psi: np.ndarray
    E: np.ndarray | None = None  # system action folded into the dilation
    horizon: int = 3
    steps: int = 3
    params: dict = field(default_factory=dict)

    @property
    def system_dim(self) -> int:
        return self.family.system_dim

    def dilation(self) -> Dilation:
        return canonical_dilation(self.family, self.E)

    def string_model(self, horizon: int | None = None, cap: int | None = None) -> StringModel:
        return build_step_unitary(self.dilation(), self.horizon if horizon is None else horizon, cap)


def _int_param(params, key, default) -> int:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ScenarioError(f"{key} must be a positive integer, got {value!r}")
    return int(value)


def build_scenario(name: str, params: dict | None = None) -> Scenario:
    """Build a named scenario; ``params`` override the defaults listed in the module docstring."""
    if name not in _DEFAULTS:
        raise ScenarioError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    params = dict(params or {})
    unknown = set(params) - _KNOWN[name]
    if unknown:
        raise ScenarioError(f"unknown parameters for {name}: {sorted(unknown)}")
    merged = {**_DEFAULTS[name], **params}
    try:
        psi = as_state(decode_vector(merged.get("psi", DEFAULT_PSI)), normalized=True)
        E = None
        if name == "cat":
            family = ReductionFamily.from_operators([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        elif name == "weak-qubit":
            theta = decode_scalar(merged["theta"]).real
            family = ReductionFamily.from_operators(
                [np.diag([np.cos(theta), 1.0]), np.diag([np.sin(theta), 0.0])]
            )
        elif name == "pointer-Zn":
            E = decode_matrix(merged["E"])
            family = pointer_family(decode_matrix(merged["X"]), decode_vector(merged["phi"]), E)
        else:
            E_free = decode_matrix(merged["E"])
            projective = projection_family(decode_matrix(merged["B0"]))
            evolution = expm_hermitian(E_free)
            family = ReductionFamily.from_operators(
                [f @ evolution for f in (projective.operator(y) for y in projective.labels)],
                values=projective.values,
            )
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"invalid parameters for {name}: {exc}") from exc
    if psi.shape[0] != family.system_dim:
        raise ScenarioError(f"psi has dim {psi.shape[0]}, system has dim {family.system_dim}")
    residual = validate_completeness(family)
    if residual > COMPLETENESS_TOL:
        raise ScenarioError(f"{name}: family is not complete (residual {residual:.3e})")
    return Scenario(
        name,
        family,
        psi,
        E,
        horizon=_int_param(params, "horizon", 3),
        steps=_int_param(params, "steps", 3),
        params=params,
    )
