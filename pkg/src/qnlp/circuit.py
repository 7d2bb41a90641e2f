"""Compilation of diagrams to parameterized quantum circuits.

Wire-to-qubit budget: a noun wire occupies ``q_n`` qubits and a sentence
wire ``q_s`` (both default 1).  Word boxes allocate fresh qubits for their
codomain and carry a parameterized block; a curried box with ``a`` domain
and ``b`` codomain qubits places its block on ``max(a, b)`` qubits, with
surplus inputs postselected to 0 or fresh zero-initialized qubits appended.
Each cup lowers to the unnormalized Bell effect: ``CNOT`` then ``H`` on the
first qubit, then both qubits postselected to 0.

Block layouts per ansatz family, on ``k`` qubits:

* any family, ``k == 1``: alternating ``RX, RZ, RX, ...`` rotations,
  ``n_single_qubit_params`` of them;
* ``iqp``: per layer, ``H`` on every qubit then ``CRZ`` on each adjacent
  pair, ``k - 1`` parameters per layer;
* ``strongly_entangling``: per layer, ``RZ, RY, RZ`` on every qubit then a
  ``CNOT`` ring, ``3k`` parameters per layer;
* ``sim14``: per layer, ``RY`` on every qubit, a ``CRX`` ring in descending
  order, ``RY`` again, a ``CRX`` ring in ascending order, ``4k`` parameters
  per layer;
* ``sim15``: like ``sim14`` with plain ``CNOT`` rings, ``2k`` parameters
  per layer (half as many as ``sim14`` on every block).

Every rotation angle is a named :class:`Symbol` ``(word, type fingerprint,
index)``; equal words with equal types share symbols, within a sentence and
across a corpus, which is what ties weights during training.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from qnlp.diagram import Box, Diagram, InvalidDiagram, validate
from qnlp.errors import Error
from qnlp.pregroup import Base, PregroupType, SimpleType


class ZeroParameterModel(Error):
    """The compiled circuit would carry no trainable parameters."""


class WidthOverflow(Error):
    """The diagram needs more qubits than the configured limit."""


class GateKind(enum.Enum):
    H = "h"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CNOT = "cnot"
    CRZ = "crz"
    CRX = "crx"


PARAMETRIC_1Q = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
PARAMETRIC_2Q = frozenset({GateKind.CRZ, GateKind.CRX})


@dataclass(frozen=True)
class Symbol:
    """A named scalar parameter shared by every gate that mentions it."""

    word: str
    type_fingerprint: str
    index: int

    @property
    def name(self) -> str:
        return f"{self.word}|{self.type_fingerprint}|{self.index}"

    @classmethod
    def from_name(cls, name: str) -> "Symbol":
        word, fingerprint, index = name.rsplit("|", 2)
        return cls(word, fingerprint, int(index))


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    param: Symbol | float | None = None


@dataclass(frozen=True)
class Circuit:
    """A gate list with postselected qubits and designated output qubits.

    ``postselect`` qubits are projected onto outcome 0 after all gates;
    ``outputs`` are the qubits carrying the diagram's open wires, in
    boundary order.  ``symbols`` is the ordered table of free parameters
    (first appearance order); a parameter vector aligns with it.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    postselect: tuple[int, ...]
    outputs: tuple[int, ...]
    symbols: tuple[Symbol, ...]


class CircuitAnsatz(enum.Enum):
    IQP = "iqp"
    STRONGLY_ENTANGLING = "strongly_entangling"
    SIM14 = "sim14"
    SIM15 = "sim15"


@dataclass(frozen=True)
class CircuitAnsatzConfig:
    kind: CircuitAnsatz
    n_layers: int = 1
    n_single_qubit_params: int = 3
    q_n: int = 1
    q_s: int = 1
    max_qubits: int = 20

    def __post_init__(self):
        if self.n_layers < 0 or self.n_single_qubit_params < 0:
            raise Error("layer and rotation counts must be non-negative")
        if self.q_n < 1 or self.q_s < 1:
            raise Error("wire qubit budgets must be at least 1")

    def qubits_of(self, t: SimpleType) -> int:
        return self.q_n if t.base is Base.N else self.q_s

    def qubits_of_type(self, ts: PregroupType) -> int:
        return sum(self.qubits_of(t) for t in ts)


def type_fingerprint(box: Box) -> str:
    """Weight-tying key: the box's full type, domain and codomain."""
    return f"{box.dom}->{box.cod}"


# -- block generators -----------------------------------------------------


def block_param_count(kind: CircuitAnsatz, k: int, cfg: CircuitAnsatzConfig) -> int:
    """Number of parameters of one ansatz block on ``k`` qubits."""
    if k < 1:
        return 0
    if k == 1:
        return cfg.n_single_qubit_params
    per_layer = {
        CircuitAnsatz.IQP: k - 1,
        CircuitAnsatz.STRONGLY_ENTANGLING: 3 * k,
        CircuitAnsatz.SIM14: 4 * k,
        CircuitAnsatz.SIM15: 2 * k,
    }[kind]
    return per_layer * cfg.n_layers


def _ring(k: int, descending: bool) -> list[tuple[int, int]]:
    order = range(k - 1, -1, -1) if descending else range(k)
    return [(i, (i + 1) % k) for i in order]


def word_block(
    word: str, fingerprint: str, qubits: tuple[int, ...], cfg: CircuitAnsatzConfig
) -> tuple[list[Gate], list[Symbol]]:
    """Gates and fresh symbols of one ansatz block on the given qubits."""
    k = len(qubits)
    symbols: list[Symbol] = []

    def sym() -> Symbol:
        s = Symbol(word, fingerprint, len(symbols))
        symbols.append(s)
        return s

    gates: list[Gate] = []
    if k == 1:
        q = qubits[0]
        for i in range(cfg.n_single_qubit_params):
            kind = GateKind.RX if i % 2 == 0 else GateKind.RZ
            gates.append(Gate(kind, (q,), sym()))
        return gates, symbols

    for _ in range(cfg.n_layers):
        if cfg.kind is CircuitAnsatz.IQP:
            for q in qubits:
                gates.append(Gate(GateKind.H, (q,)))
            for i in range(k - 1):
                gates.append(Gate(GateKind.CRZ, (qubits[i], qubits[i + 1]), sym()))
        elif cfg.kind is CircuitAnsatz.STRONGLY_ENTANGLING:
            for q in qubits:
                gates.append(Gate(GateKind.RZ, (q,), sym()))
                gates.append(Gate(GateKind.RY, (q,), sym()))
                gates.append(Gate(GateKind.RZ, (q,), sym()))
            for a, b in _ring(k, descending=False):
                gates.append(Gate(GateKind.CNOT, (qubits[a], qubits[b])))
        elif cfg.kind is CircuitAnsatz.SIM14:
            for q in qubits:
                gates.append(Gate(GateKind.RY, (q,), sym()))
            for a, b in _ring(k, descending=True):
                gates.append(Gate(GateKind.CRX, (qubits[a], qubits[b]), sym()))
            for q in qubits:
                gates.append(Gate(GateKind.RY, (q,), sym()))
            for a, b in _ring(k, descending=False):
                gates.append(Gate(GateKind.CRX, (qubits[a], qubits[b]), sym()))
        elif cfg.kind is CircuitAnsatz.SIM15:
            for q in qubits:
                gates.append(Gate(GateKind.RY, (q,), sym()))
            for a, b in _ring(k, descending=True):
                gates.append(Gate(GateKind.CNOT, (qubits[a], qubits[b])))
            for q in qubits:
                gates.append(Gate(GateKind.RY, (q,), sym()))
            for a, b in _ring(k, descending=False):
                gates.append(Gate(GateKind.CNOT, (qubits[a], qubits[b])))
        else:
            raise ValueError(f"unknown ansatz kind: {cfg.kind!r}")
    return gates, symbols


def cup_block(q1: int, q2: int) -> tuple[list[Gate], list[int]]:
    """The unnormalized Bell effect on a qubit pair.

    ``CNOT(q1 -> q2)`` then ``H(q1)``, both qubits postselected to 0,
    projects onto ``(<00| + <11|) / sqrt(2)``.
    """
    return [Gate(GateKind.CNOT, (q1, q2)), Gate(GateKind.H, (q1,))], [q1, q2]


# -- compilation ----------------------------------------------------------


@dataclass(frozen=True)
class _Plan:
    """Qubit layout shared by compilation and parameter counting."""

    n_qubits: int
    block_qubits: dict[int, tuple[int, ...]]  # box -> block qubit tuple
    box_postselect: dict[int, tuple[int, ...]]
    wire_qubits: dict[int, tuple[int, ...]]
    cup_qubit_pairs: list[tuple[int, int]]
    output_qubits: tuple[int, ...]


def _plan(d: Diagram, cfg: CircuitAnsatzConfig) -> _Plan:
    violations = validate(d)
    if violations:
        raise InvalidDiagram(violations)
    if d.n_caps:
        raise Error("cap wires are not supported by the circuit backend; "
                    "run the normal-form pass first")

    wire_qubits: dict[int, tuple[int, ...]] = {}
    block_qubits: dict[int, tuple[int, ...]] = {}
    box_postselect: dict[int, tuple[int, ...]] = {}
    counter = 0

    def fresh(n: int) -> list[int]:
        nonlocal counter
        qs = list(range(counter, counter + n))
        counter += n
        return qs

    for b in d.topological_boxes():
        box = d.boxes[b]
        dom_qubits: list[int] = []
        for w in d.dom_wires(b):
            dom_qubits.extend(wire_qubits[w])
        cod_need = cfg.qubits_of_type(box.cod)
        if len(dom_qubits) >= cod_need:
            qubits = dom_qubits
        else:
            qubits = dom_qubits + fresh(cod_need - len(dom_qubits))
        # Codomain wires take the leading block qubits; surplus inputs are
        # postselected away.
        pos = 0
        for w in d.cod_wires(b):
            width = cfg.qubits_of(d.wires[w].stype)
            wire_qubits[w] = tuple(qubits[pos : pos + width])
            pos += width
        block_qubits[b] = tuple(qubits)
        box_postselect[b] = tuple(qubits[pos:])

    cup_qubit_pairs: list[tuple[int, int]] = []
    for wl, wr in d.cup_pairs():
        for a, b2 in zip(wire_qubits[wl], wire_qubits[wr]):
            cup_qubit_pairs.append((a, b2))

    output_qubits = tuple(
        q for w in d.open_wires() for q in wire_qubits[w]
    )
    if counter > cfg.max_qubits:
        raise WidthOverflow(
            f"diagram needs {counter} qubits, limit is {cfg.max_qubits}"
        )
    return _Plan(counter, block_qubits, box_postselect, wire_qubits,
                 cup_qubit_pairs, output_qubits)


def compile_circuit(d: Diagram, cfg: CircuitAnsatzConfig) -> Circuit:
    """Lower a diagram to a parameterized circuit under the given ansatz."""
    plan = _plan(d, cfg)
    gates: list[Gate] = []
    symbols: list[Symbol] = []
    seen: set[Symbol] = set()
    postselect: set[int] = set()

    for b in d.topological_boxes():
        box = d.boxes[b]
        block_gates, block_symbols = word_block(
            box.name, type_fingerprint(box), plan.block_qubits[b], cfg
        )
        gates.extend(block_gates)
        for s in block_symbols:
            if s not in seen:
                seen.add(s)
                symbols.append(s)
        postselect.update(plan.box_postselect[b])

    for q1, q2 in plan.cup_qubit_pairs:
        cup_gates, cup_post = cup_block(q1, q2)
        gates.extend(cup_gates)
        postselect.update(cup_post)

    if not symbols:
        raise ZeroParameterModel(
            "no trainable parameters: every block in the circuit is empty"
        )
    return Circuit(
        n_qubits=plan.n_qubits,
        gates=tuple(gates),
        postselect=tuple(sorted(postselect)),
        outputs=plan.output_qubits,
        symbols=tuple(symbols),
    )


def param_count(d: Diagram, cfg: CircuitAnsatzConfig) -> int:
    """Size of the circuit's symbol table, without building any gates."""
    plan = _plan(d, cfg)
    distinct: set[tuple[str, str]] = set()
    total = 0
    for b, box in enumerate(d.boxes):
        key = (box.name, type_fingerprint(box))
        if key in distinct:
            continue
        distinct.add(key)
        total += block_param_count(cfg.kind, len(plan.block_qubits[b]), cfg)
    if total == 0:
        raise ZeroParameterModel(
            "no trainable parameters: every block in the circuit is empty"
        )
    return total


# -- serialization --------------------------------------------------------


def circuit_to_dict(c: Circuit) -> dict:
    def param_json(p):
        if p is None:
            return None
        if isinstance(p, Symbol):
            return p.name
        return float(p)

    return {
        "n_qubits": c.n_qubits,
        "gates": [
            {"kind": g.kind.value, "qubits": list(g.qubits), "param": param_json(g.param)}
            for g in c.gates
        ],
        "postselect": list(c.postselect),
        "outputs": list(c.outputs),
        "symbols": [
            {"word": s.word, "type": s.type_fingerprint, "index": s.index}
            for s in c.symbols
        ],
    }


def circuit_from_dict(obj: Mapping) -> Circuit:
    def param_from(p):
        if p is None:
            return None
        if isinstance(p, str):
            return Symbol.from_name(p)
        return float(p)

    return Circuit(
        n_qubits=int(obj["n_qubits"]),
        gates=tuple(
            Gate(GateKind(g["kind"]), tuple(int(q) for q in g["qubits"]), param_from(g["param"]))
            for g in obj["gates"]
        ),
        postselect=tuple(int(q) for q in obj["postselect"]),
        outputs=tuple(int(q) for q in obj["outputs"]),
        symbols=tuple(
            Symbol(s["word"], s["type"], int(s["index"])) for s in obj["symbols"]
        ),
    )


def circuit_to_json(c: Circuit, indent: int | None = 2) -> str:
    return json.dumps(circuit_to_dict(c), indent=indent)


def circuit_from_json(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))
