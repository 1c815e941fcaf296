"""A walk through annotated higher-order stacks.

An order-2 stack is a stack of ordinary stacks.  Pushing a character can
attach an annotation: a snapshot of the stack context the character could
later jump back to via collapse.  This script replays the classic
push / copy / collapse round trip and prints every intermediate stack in
the bracket encoding used across the package.
"""

import cpds.stacks as ST
from cpds import apply_op, bottom, decode, encode, mk_char, mk_stack, top1

w = mk_stack(2, (mk_stack(1, (mk_char("a"),)), mk_stack(1, (mk_char("b"),))))
print("start:          ", encode(w))

w1 = apply_op(ST.push("c", 2), w)
print("after push c^2: ", encode(w1))
print("  the new c is annotated with", encode(ST.top1_char(w1).ann), "- the")
print("  order-2 context below the current top stack")

w2 = apply_op(ST.copy(2), w1)
print("after copy_2:   ", encode(w2))

w3 = apply_op(ST.collapse(2), w2)
print("after collapse_2:", encode(w3))
print("  collapse jumped to the annotation, discarding both copies")

# the encoding round-trips
assert decode(encode(w2), 2) == w2

# the empty stack keeps a bottom marker that cannot be popped or rewritten
print("empty order-3 stack:", encode(bottom(3)))
print("top character of it:", top1(bottom(3)))
