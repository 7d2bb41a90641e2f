"""
Compiling to a quantum circuit and reading out a sentence
=========================================================

"""

import numpy as np

from qnlp.circuit import CircuitAnsatz, CircuitAnsatzConfig, compile_circuit
from qnlp.corpus import default_lexicon
from qnlp.pregroup import parse_sentence
from qnlp.rewrite import RewriteScheme, rewrite
from qnlp.simulator import sentence_distribution

lexicon = default_lexicon()
diagram = parse_sentence(["man", "cooks", "meal"], lexicon)

# Without currying, every noun wire is a qubit and every cup becomes a
# postselected Bell measurement.
wide = compile_circuit(
    diagram, CircuitAnsatzConfig(kind=CircuitAnsatz.IQP, n_layers=1)
)
print("plain parse:  ", wide.n_qubits, "qubits,",
      len(wide.postselect), "postselected,", len(wide.symbols), "parameters")

# The curried form is narrower: words act as blocks on the sentence wire.
narrow = compile_circuit(
    rewrite(diagram, RewriteScheme.RE_NORM_CUR_NORM),
    CircuitAnsatzConfig(kind=CircuitAnsatz.IQP, n_layers=1),
)
print("curried form: ", narrow.n_qubits, "qubits,",
      len(narrow.postselect), "postselected,", len(narrow.symbols), "parameters")

# Parameters are named word|type|index, so every occurrence of a word
# with the same type shares weights across the whole corpus.
print("\nfirst parameters:", [s.name for s in narrow.symbols[:3]])

# Binding angles and simulating yields a two-outcome distribution over
# the sentence qubit; the survival norm tracks how much amplitude the
# postselections kept.
rng = np.random.default_rng(0)
dist = sentence_distribution(narrow, rng.uniform(0, 2 * np.pi, len(narrow.symbols)))
print("\nprobabilities:", np.round(dist.probs, 4),
      " survival:", round(dist.survival_norm, 4))
