"""
From words to a typed diagram
=============================

"""

from qnlp.corpus import default_lexicon
from qnlp.pregroup import parse_sentence, reduce_types, ty

# Types are built from n (noun) and s (sentence) with iterated adjoints.
verb = ty("n.r@s@n.l")
print("transitive verb type:", verb)
print("its left adjoint:   ", verb.l)

# The bundled lexicon maps each corpus word to a type.
lexicon = default_lexicon()
print("\n'prepares' has type", lexicon.lookup("prepares")[0])

# reduce_types finds which adjacent pairs cancel so that only the
# sentence wire remains.
types = [t for w in ["man", "prepares", "sauce"] for t in lexicon.lookup(w)[0]]
reduction = reduce_types(types, ty("s"))
print("\ncups:", sorted(reduction.cups))
print("residual wires:", [str(types[i]) for i in reduction.residual])

# parse_sentence bundles the above into a diagram: one box per word,
# one cup per cancellation, one open output wire.
diagram = parse_sentence(["skillful", "man", "prepares", "tasty", "sauce"], lexicon)
print("\nfive-word parse:", diagram.n_cups, "cups,",
      len(diagram.boxes), "boxes,", diagram.n_outputs, "output")
