"""Skeletons: process refinements of map, zipWith, mapWith and foldl.

Every skeleton takes process templates (:class:`~serpent_csp.process.Proc`)
and returns a new template, so skeletons nest. Stream skeletons reuse a
single instance of the stage for every element; vector skeletons replicate
the stage once per element and run the copies side by side.

Fold stages have the signature ``Bundle(ACC, ARG) -> ACC``: the accumulator
plus one per-stage argument in, the new accumulator out.
"""

from __future__ import annotations

from .kernel import Par, Recv, Send
from .ports import (Bundle, BundlePort, ShapeError, Stream, Vector,
                    next_or_eot, recv, recv_stream, send, transpose)
from .process import Node, Proc, label_stage

__all__ = [
    "smap", "vmap", "vmapwith", "szipwith", "vzipwith", "sbind", "vvfoldl",
    "svfoldl", "fold_arg_shapes",
]


def _pair_shapes(f, what):
    if not isinstance(f.in_shape, Bundle) or len(f.in_shape.parts) != 2:
        raise ShapeError(f"{what} needs a two-input stage, {f.name} takes {f.in_shape}")
    return f.in_shape.parts


def fold_arg_shapes(f):
    """``(ACC, ARG)`` of a fold stage, checking that it returns ``ACC``."""
    acc, arg = _pair_shapes(f, "fold")
    if f.out_shape != acc:
        raise ShapeError(f"fold stage {f.name} must return its accumulator shape {acc}, "
                         f"got {f.out_shape}")
    return acc, arg


def smap(f):
    """SMAP(F): apply ``F`` to each element of a stream, then forward the EOT."""
    def builder(g, inp, out):
        node = Node(g.unique("smap"))
        inner = f.build(g, inp.elements, out.elements)

        def body():
            while (yield from next_or_eot(inp)):
                yield Par([inner])
            yield Send(out.eot, True)
        node.body = body
        node.children.append(inner)
        return node
    return Proc(f"SMAP({f.name})", Stream(f.in_shape), Stream(f.out_shape), builder)


def vmapwith(stages):
    """VMAPWITH([F0..Fn-1]): stage ``i`` handles vector element ``i``, all concurrently."""
    stages = list(stages)
    if not stages:
        raise ShapeError("vmapwith needs at least one stage")
    first = stages[0]
    for s in stages[1:]:
        if (s.in_shape, s.out_shape) != (first.in_shape, first.out_shape):
            raise ShapeError(f"vmapwith stages disagree: {first} vs {s}")
    n = len(stages)

    def builder(g, inp, out):
        return Node(g.unique("vmapwith"),
                    children=[s.build(g, inp[i], out[i]) for i, s in enumerate(stages)],
                    is_process=False)
    name = "VMAPWITH([" + ", ".join(s.name for s in stages) + "])"
    return Proc(name, Vector(n, first.in_shape), Vector(n, first.out_shape), builder)


def vmap(n, f):
    """VMAP_n(F): ``n`` independent copies of ``F`` over a vector."""
    if n < 1:
        raise ShapeError(f"vmap needs n >= 1, got {n}")
    p = vmapwith([f] * n)
    p.name = f"VMAP{n}({f.name})"
    return p


def szipwith(f):
    """SZIPWITH(F): pair up two streams element by element.

    Both end-of-transmission messages are consumed and one is forwarded.
    Unequal lengths leave a producer blocked, which the run reports as a
    deadlock rather than silently truncating.
    """
    a, b = _pair_shapes(f, "szipwith")

    def builder(g, inp, out):
        left, right = inp[0], inp[1]
        pair = BundlePort([left.elements, right.elements])
        inner = f.build(g, pair, out.elements)
        node = Node(g.unique("szipwith"))

        def body():
            while (yield from next_or_eot(left)):
                yield Par([inner])
            yield Recv(right.eot)
            yield Send(out.eot, True)
        node.body = body
        node.children.append(inner)
        return node
    return Proc(f"SZIPWITH({f.name})", Bundle(Stream(a), Stream(b)), Stream(f.out_shape), builder)


def vzipwith(n, f):
    """VZIPWITH_n(F): ``n`` copies of a binary stage over two vectors."""
    if n < 1:
        raise ShapeError(f"vzipwith needs n >= 1, got {n}")
    a, b = _pair_shapes(f, "vzipwith")

    def builder(g, inp, out):
        pairs = transpose(inp)
        return Node(g.unique("vzipwith"),
                    children=[f.build(g, pairs[i], out[i]) for i in range(n)],
                    is_process=False)
    return Proc(f"VZIPWITH{n}({f.name})", Bundle(Vector(n, a), Vector(n, b)),
                Vector(n, f.out_shape), builder)


def sbind(f):
    """Fix the argument of a fold stage and map it over a stream of accumulators.

    Input ``Bundle(Stream(ACC), ARG)``: the argument is received once, then
    ``F(acc, arg)`` is produced for each accumulator. This is one stage of a
    pipelined fold.
    """
    acc, arg = fold_arg_shapes(f)

    def builder(g, inp, out):
        accs, arg_in = inp[0], inp[1]
        held = g.port(arg, "arg")
        inner = f.build(g, BundlePort([accs.elements, held]), out.elements)
        node = Node(g.unique("sbind"))

        def body():
            value = yield from recv(arg_in)
            while (yield from next_or_eot(accs)):
                yield Par([inner, send(held, value)])
            yield Send(out.eot, True)
        node.body = body
        node.children.append(inner)
        return node
    return Proc(f"SBIND({f.name})", Bundle(Stream(acc), arg), Stream(acc), builder)


def vvfoldl(k, f):
    """VVFOLDL_k(F): ``k`` fold stages in a pipeline, stage ``i`` bound to ``args[i]``.

    Input is ``Bundle(Stream(ACC), Vector(k, ARG))`` and the output is the
    stream of fully folded accumulators. Successive stream elements can sit
    in different stages at the same time. Stages are labelled ``fold[i]``.
    """
    if k < 1:
        raise ShapeError(f"vvfoldl needs k >= 1, got {k}")
    acc, arg = fold_arg_shapes(f)
    stage = sbind(f)

    def builder(g, inp, out):
        links = [inp[0]] + [g.port(Stream(acc), "fold") for _ in range(k - 1)] + [out]
        args = inp[1]
        children = []
        for i in range(k):
            node = stage.build(g, BundlePort([links[i], args[i]]), links[i + 1])
            label_stage(node, f"fold[{i}]")
            children.append(node)
        return Node(g.unique("vvfoldl"), children=children, is_process=False)
    return Proc(f"VVFOLDL{k}({f.name})", Bundle(Stream(acc), Vector(k, arg)), Stream(acc), builder)


def svfoldl(f):
    """SVFOLDL(F): one fold stage reused over a stream of arguments.

    Input is ``Bundle(Stream(ACC), Stream(ARG))``. The argument stream is read
    once and kept, then every accumulator in the first stream is folded over
    all arguments in order by the single ``F`` instance. An empty argument
    stream makes this the identity on accumulators.
    """
    acc, arg = fold_arg_shapes(f)

    def builder(g, inp, out):
        accs, args = inp[0], inp[1]
        acc_in = g.port(acc, "acc")
        arg_in = g.port(arg, "arg")
        acc_out = g.port(acc, "acc")
        inner = f.build(g, BundlePort([acc_in, arg_in]), acc_out)
        node = Node(g.unique("svfoldl"))

        def body():
            held = yield from recv_stream(args)
            while (yield from next_or_eot(accs)):
                value = yield from recv(accs.elements)
                for a in held:
                    res = yield Par([inner, send(acc_in, value), send(arg_in, a), recv(acc_out)])
                    value = res[3]
                yield from send(out.elements, value)
            yield Send(out.eot, True)
        node.body = body
        node.children.append(inner)
        label_stage(node, "sfold")
        return node
    return Proc(f"SVFOLDL({f.name})", Bundle(Stream(acc), Stream(arg)), Stream(acc), builder)
