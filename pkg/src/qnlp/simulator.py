"""Exact statevector execution of circuits with postselection.

States are dense complex tensors of shape ``(2,) * n_qubits``.  Rotations
follow the ``exp(-i * theta * P / 2)`` convention, so ``RZ(theta)`` is
``diag(e^{-i theta/2}, e^{+i theta/2})`` and controlled rotations apply the
same half-angle block on the target when the control is 1.  Postselection
slices the outcome-0 component without renormalizing; the squared norm of
what survives is reported as ``survival_norm``, and renormalization happens
only in :func:`sentence_distribution`.

Gradients of the renormalized distribution come from parameter-shift rules
chained through the quotient ``p = N / D`` (``N``: unnormalized output
marginal, ``D``: survival norm).  A parameter used by exactly one
single-qubit rotation gets the two-term ``+-pi/2`` rule.  A parameter used
by exactly one controlled rotation gets a four-term rule with shifts
``+-pi/2, +-3pi/2``: controlled rotations mix half-integer and integer
frequencies, so the plain two-term rule is not exact for them.  Parameters
reused across gates fall back to central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from qnlp.circuit import PARAMETRIC_1Q, PARAMETRIC_2Q, Circuit, Gate, GateKind, Symbol
from qnlp.errors import Error


class IndexOutOfRange(Error):
    """A gate addresses a qubit the state does not have."""


class ZeroSurvival(Error):
    """Postselection annihilated the state (survival norm below 1e-12)."""


class WrongOutputArity(Error):
    """The circuit does not expose exactly one output qubit."""


SURVIVAL_EPS = 1e-12

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Four-term shift-rule coefficients, exact for the frequency set {1/2, 1}
# of controlled rotations.
_C_PLUS = (math.sqrt(2.0) + 1.0) / (4.0 * math.sqrt(2.0))
_C_MINUS = (math.sqrt(2.0) - 1.0) / (4.0 * math.sqrt(2.0))

_FD_STEP = 1e-6


def _mat_1q(kind: GateKind, angle: float | None) -> np.ndarray:
    if kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _INV_SQRT2
    if angle is None:
        raise Error(f"gate {kind.value} needs an angle")
    h = angle / 2.0
    c, s = math.cos(h), math.sin(h)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind is GateKind.RZ:
        return np.array(
            [[np.exp(-1j * h), 0], [0, np.exp(1j * h)]], dtype=np.complex128
        )
    raise Error(f"not a single-qubit gate: {kind.value}")


def _mat_2q(kind: GateKind, angle: float | None) -> np.ndarray:
    m = np.eye(4, dtype=np.complex128)
    if kind is GateKind.CNOT:
        m[2:, 2:] = np.array([[0, 1], [1, 0]])
        return m
    if angle is None:
        raise Error(f"gate {kind.value} needs an angle")
    if kind is GateKind.CRZ:
        h = angle / 2.0
        m[2, 2] = np.exp(-1j * h)
        m[3, 3] = np.exp(1j * h)
        return m
    if kind is GateKind.CRX:
        m[2:, 2:] = _mat_1q(GateKind.RX, angle)
        return m
    raise Error(f"not a two-qubit gate: {kind.value}")


def zero_state(n_qubits: int) -> np.ndarray:
    state = np.zeros((2,) * n_qubits, dtype=np.complex128)
    state[(0,) * n_qubits] = 1.0
    return state


def apply(state: np.ndarray, gate: Gate, angle: float | None = None) -> np.ndarray:
    """Left-multiply the gate unitary on the designated qubit axes."""
    n = state.ndim
    for q in gate.qubits:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} out of range for {n}-qubit state")
    if len(gate.qubits) == 1:
        u = _mat_1q(gate.kind, angle)
        out = np.tensordot(u, state, axes=([1], [gate.qubits[0]]))
        return np.moveaxis(out, 0, gate.qubits[0])
    if len(gate.qubits) == 2:
        u = _mat_2q(gate.kind, angle).reshape(2, 2, 2, 2)
        out = np.tensordot(u, state, axes=([2, 3], list(gate.qubits)))
        return np.moveaxis(out, [0, 1], list(gate.qubits))
    raise Error(f"unsupported gate arity: {len(gate.qubits)}")


def param_vector(circuit: Circuit, params) -> np.ndarray:
    """Coerce a mapping or sequence of angles into symbol-table order."""
    if isinstance(params, Mapping):
        try:
            vec = [float(params[s]) for s in circuit.symbols]
        except KeyError as exc:
            raise Error(f"missing value for symbol {exc.args[0]!r}") from None
        return np.asarray(vec, dtype=float)
    vec = np.asarray(params, dtype=float).reshape(-1)
    if vec.shape[0] != len(circuit.symbols):
        raise Error(
            f"expected {len(circuit.symbols)} parameter values, got {vec.shape[0]}"
        )
    return vec


@dataclass(frozen=True)
class RunResult:
    """Post-projection amplitudes over the surviving (kept) qubits."""

    amplitudes: np.ndarray
    kept_qubits: tuple[int, ...]
    survival_norm: float


def _execute(circuit: Circuit, theta: np.ndarray, initial_state=None) -> np.ndarray:
    if initial_state is None:
        state = zero_state(circuit.n_qubits)
    else:
        state = np.asarray(initial_state, dtype=np.complex128)
        if state.size != 2**circuit.n_qubits:
            raise Error(
                f"initial state has {state.size} amplitudes, "
                f"expected {2**circuit.n_qubits}"
            )
        state = state.reshape((2,) * circuit.n_qubits).copy()
    values = dict(zip(circuit.symbols, theta))
    for gate in circuit.gates:
        if isinstance(gate.param, Symbol):
            angle = values[gate.param]
        else:
            angle = gate.param
        state = apply(state, gate, angle)
    return state


def _project(circuit: Circuit, theta: np.ndarray, initial_state=None):
    state = _execute(circuit, theta, initial_state)
    post = set(circuit.postselect)
    indexer = tuple(0 if q in post else slice(None) for q in range(circuit.n_qubits))
    amps = state[indexer]
    kept = tuple(q for q in range(circuit.n_qubits) if q not in post)
    survival = float(np.sum(np.abs(amps) ** 2))
    return amps, kept, survival


def run(circuit: Circuit, params=None, initial_state=None) -> RunResult:
    """Execute and project; ``initial_state`` is a test-only entry point.

    Raises :class:`ZeroSurvival` when the projection leaves less than
    ``SURVIVAL_EPS`` of the squared norm.
    """
    theta = np.zeros(0) if params is None else param_vector(circuit, params)
    amps, kept, survival = _project(circuit, theta, initial_state)
    if survival < SURVIVAL_EPS:
        raise ZeroSurvival(f"survival norm {survival:.3e} below {SURVIVAL_EPS}")
    return RunResult(amps, kept, survival)


def _marginal(circuit: Circuit, theta: np.ndarray, initial_state=None):
    """Unnormalized probability marginal over the output qubits.

    Returns ``(N, D)`` with ``N`` flat of length ``2**n_outputs`` (output
    order, first output = most significant bit) and ``D`` the survival
    norm.  Non-output kept qubits are summed out.
    """
    amps, kept, survival = _project(circuit, theta, initial_state)
    axis_of = {q: i for i, q in enumerate(kept)}
    for q in circuit.outputs:
        if q not in axis_of:
            raise Error(f"output qubit {q} is postselected")
    probs = np.abs(amps) ** 2
    drop = tuple(i for i, q in enumerate(kept) if q not in set(circuit.outputs))
    if drop:
        probs = probs.sum(axis=drop)
    remaining = [q for q in kept if q in set(circuit.outputs)]
    perm = [remaining.index(q) for q in circuit.outputs]
    probs = np.transpose(probs, perm) if perm else probs
    return probs.reshape(-1), survival


@dataclass(frozen=True)
class Distribution:
    probs: np.ndarray
    survival_norm: float
    degenerate: bool


def sentence_distribution(circuit: Circuit, params, initial_state=None) -> Distribution:
    """Renormalized two-outcome distribution of the single output qubit."""
    if len(circuit.outputs) != 1:
        raise WrongOutputArity(
            f"expected exactly one output qubit, circuit has {len(circuit.outputs)}"
        )
    theta = param_vector(circuit, params)
    n, d = _marginal(circuit, theta, initial_state)
    if d < SURVIVAL_EPS:
        return Distribution(np.array([0.5, 0.5]), d, True)
    return Distribution(n / d, d, False)


@dataclass(frozen=True)
class DistributionGradient:
    probs: np.ndarray
    jacobian: np.ndarray  # shape (n_params, 2): d p_j / d theta_i
    survival_norm: float
    degenerate: bool


def distribution_gradient(circuit: Circuit, params, initial_state=None) -> DistributionGradient:
    """Jacobian of the renormalized distribution w.r.t. every parameter.

    Rule selection per parameter: two-term shift for a single 1-qubit
    rotation use, four-term shift for a single controlled-rotation use,
    central finite differences (h = 1e-6) for reused parameters.  The
    quotient rule ``dp = (dN - p * dD) / D`` folds in the renormalization.
    """
    if len(circuit.outputs) != 1:
        raise WrongOutputArity(
            f"expected exactly one output qubit, circuit has {len(circuit.outputs)}"
        )
    theta = param_vector(circuit, params)
    n_params = len(circuit.symbols)
    n0, d0 = _marginal(circuit, theta, initial_state)
    if d0 < SURVIVAL_EPS:
        return DistributionGradient(
            np.array([0.5, 0.5]), np.zeros((n_params, 2)), d0, True
        )
    p = n0 / d0
    jac = np.zeros((n_params, 2))

    uses_of: dict[Symbol, list[Gate]] = {s: [] for s in circuit.symbols}
    for g in circuit.gates:
        if isinstance(g.param, Symbol):
            uses_of[g.param].append(g)

    def at(i: int, value: float):
        shifted = theta.copy()
        shifted[i] = value
        return _marginal(circuit, shifted, initial_state)

    for i, s in enumerate(circuit.symbols):
        uses = uses_of[s]
        if len(uses) == 1 and uses[0].kind in PARAMETRIC_1Q:
            np_, dp_ = at(i, theta[i] + math.pi / 2)
            nm_, dm_ = at(i, theta[i] - math.pi / 2)
            dn = (np_ - nm_) / 2.0
            dd = (dp_ - dm_) / 2.0
        elif len(uses) == 1 and uses[0].kind in PARAMETRIC_2Q:
            n1, d1 = at(i, theta[i] + math.pi / 2)
            n2, d2 = at(i, theta[i] - math.pi / 2)
            n3, d3 = at(i, theta[i] + 3 * math.pi / 2)
            n4, d4 = at(i, theta[i] - 3 * math.pi / 2)
            dn = _C_PLUS * (n1 - n2) - _C_MINUS * (n3 - n4)
            dd = _C_PLUS * (d1 - d2) - _C_MINUS * (d3 - d4)
        else:
            np_, dp_ = at(i, theta[i] + _FD_STEP)
            nm_, dm_ = at(i, theta[i] - _FD_STEP)
            dn = (np_ - nm_) / (2.0 * _FD_STEP)
            dd = (dp_ - dm_) / (2.0 * _FD_STEP)
        jac[i] = (dn - p * dd) / d0
    return DistributionGradient(p, jac, d0, False)


def gradient(circuit: Circuit, params, upstream: Sequence[float], initial_state=None):
    """Chain an upstream d loss/d probs through the distribution Jacobian.

    Returns ``(d loss/d params, degenerate)``; a degenerate postselection
    yields a zero gradient.
    """
    res = distribution_gradient(circuit, params, initial_state)
    up = np.asarray(upstream, dtype=float).reshape(-1)
    if up.shape[0] != res.probs.shape[0]:
        raise Error(
            f"upstream length {up.shape[0]} does not match distribution "
            f"size {res.probs.shape[0]}"
        )
    return res.jacobian @ up, res.degenerate
