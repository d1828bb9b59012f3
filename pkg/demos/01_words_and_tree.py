"""Reduced words as vertices of the d-regular tree.

Run: python3 demos/01_words_and_tree.py
"""
from rwre import IDENTITY, GeneratorSet, Vertex

gs = GeneratorSet(k=1, r=2)  # a, a^-1, b1, b2: the 4-regular tree
print("generators:", gs.labels)

# Left multiplication either extends a word or cancels its first letter.
x = gs.reduce_word([0, 2, 1])
print("reduce [a1, b1, a1^-1] ->", x, "level", x.level, "type", gs.label(x.type))
y = gs.left_multiply(gs.inv(x.type), x)
print("cancel the first letter ->", y, "which is the parent:", y == x.parent)

# Involutions cancel themselves.
print("b1 b1 =", gs.reduce_word([2, 2]), "is identity:", gs.reduce_word([2, 2]) == IDENTITY)

# Every non-root vertex has d - 1 children, so level n holds d (d-1)^(n-1) vertices.
for n in range(5):
    print(f"level {n}: {sum(1 for _ in gs.sphere(n))} vertices")

# Text form round trip, used in CSV dumps.
print("text form:", repr(x.text), "->", Vertex.from_text(x.text))
