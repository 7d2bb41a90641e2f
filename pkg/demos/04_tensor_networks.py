"""
The classical backend: tensor networks
======================================

"""

import numpy as np

from qnlp.corpus import default_lexicon
from qnlp.pregroup import parse_sentence
from qnlp.rewrite import RewriteScheme, rewrite
from qnlp.tensornet import (
    TensorAnsatz,
    TensorAnsatzConfig,
    compile_network,
    contract,
    gradient_hole,
)

lexicon = default_lexicon()
diagram = rewrite(
    parse_sentence(["man", "cooks", "meal"], lexicon), RewriteScheme.RE
)

# Three lowerings of the same diagram: dense word tensors, copy-spider
# factorizations, and matrix-product chains with a fixed bond dimension.
for kind in TensorAnsatz:
    net = compile_network(diagram, TensorAnsatzConfig(kind=kind))
    shapes = sorted(net.param_shapes().values())
    total = sum(int(np.prod(s)) for s in shapes)
    print(f"{kind.value:7s} parameters={total:3d} shapes={shapes}")

# Contracting with concrete tensors gives the sentence vector directly.
net = compile_network(diagram, TensorAnsatzConfig(kind=TensorAnsatz.TENSOR))
rng = np.random.default_rng(0)
store = {s: rng.standard_normal(shape) for s, shape in net.param_shapes().items()}
vec = contract(net, store)
print("\nsentence vector:", np.round(vec, 4))

# Gradients come from hole contraction: remove one tensor, contract the
# rest against an upstream cotangent. Exact, no finite differences.
grads = gradient_hole(net, store, np.array([1.0, 0.0]))
for sym, g in sorted(grads.items(), key=lambda kv: kv[0].name):
    print(f"d/d {sym.name:20s} shape {g.shape}")
