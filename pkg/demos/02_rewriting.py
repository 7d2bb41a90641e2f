"""
Rewriting diagrams before compilation
=====================================

"""

from qnlp.corpus import default_lexicon
from qnlp.diagram import count_stats
from qnlp.pregroup import parse_sentence
from qnlp.rewrite import RewriteScheme, rewrite

lexicon = default_lexicon()
diagram = parse_sentence(["skillful", "man", "prepares", "tasty", "sauce"], lexicon)

# Each scheme is a pipeline of passes; "re" leaves the parse untouched,
# the "cur" stages bend verb and adjective wires so fewer cups remain.
for scheme in RewriteScheme:
    out = rewrite(diagram, scheme)
    stats = count_stats(out)
    kinds = [box.kind.value for box in out.boxes]
    print(f"{scheme.value:16s} cups={stats.n_cups} width={stats.max_width} "
          f"open={stats.open_types} boxes={kinds}")

# Fewer cups means fewer postselected qubits later: each cup costs a
# Bell-effect measurement when the diagram becomes a circuit.
