"""Process templates, feed composition and the utility processes.

A :class:`Proc` is a template: it declares an input shape and an output shape
(``None`` for "no port") and knows how to build itself against concrete
ports. Building returns a :class:`Node`; the node tree of a closed network is
static, so it can be counted (processes, channels) before anything runs.
Nodes may be run more than once, e.g. once per stream element under SMAP,
which mirrors a circuit being reused rather than re-synthesized.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .kernel import (Channel, DeadlockError, Par, ProtocolError, Send, SendAll,
                     SimEngine, ThreadEngine, Work)
from .ports import (ITEM, Bundle, BundlePort, ShapeError, Stream, StreamPort,
                    Vector, VectorPort, flatten_value, make_port, next_or_eot,
                    recv, recv_stream, send)


class Node:
    """A built process (``is_process``) or a pure parallel composition.

    A process node with a body may still list children: they are nodes its
    body launches itself (e.g. a stage reused per stream element), kept in the
    tree so they are counted, but never started implicitly.
    """

    __slots__ = ("name", "body", "children", "is_process", "stage", "value")

    def __init__(self, name, body=None, children=(), is_process=True):
        self.name = name
        self.body = body
        self.children = list(children)
        self.is_process = is_process
        self.stage = None
        self.value = None

    def run(self):
        if self.body is None:
            return _par_children(self.children)
        return self.body()

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def process_count(self):
        return sum(1 for n in self.walk() if n.is_process)

    def __repr__(self):
        return f"Node({self.name!r})"


def _par_children(children):
    yield Par(children)


def label_stage(node, stage):
    """Tag ``node`` and its unlabelled descendants with a pipeline stage name."""
    for n in node.walk():
        if n.stage is None:
            n.stage = stage


class Graph:
    """Channel allocator for one network build."""

    def __init__(self, capacity=0):
        if capacity not in (0, 1):
            raise ValueError("capacity must be 0 or 1")
        self.capacity = capacity
        self.channels = []
        self.streams = []
        self.outputs = {}
        self._names = Counter()

    def unique(self, name):
        self._names[name] += 1
        return f"{name}#{self._names[name]}"

    def channel(self, name):
        ch = Channel(name, self.capacity)
        self.channels.append(ch)
        return ch

    def port(self, shape, name="p"):
        p = make_port(shape, self.channel, self.unique(name))
        self.streams.extend(iter_streams(p))
        return p


def iter_streams(port):
    if isinstance(port, StreamPort):
        yield port
        yield from iter_streams(port.elements)
    elif isinstance(port, VectorPort):
        for e in port.elements:
            yield from iter_streams(e)
    elif isinstance(port, BundlePort):
        for p in port.parts:
            yield from iter_streams(p)


class Proc:
    """Process template with declared port shapes.

    ``builder(g, inp, out)`` must return a :class:`Node`.
    """

    def __init__(self, name, in_shape, out_shape, builder):
        self.name = name
        self.in_shape = in_shape
        self.out_shape = out_shape
        self._builder = builder

    def build(self, g, inp=None, out=None):
        _check_port(self, "input", self.in_shape, inp)
        _check_port(self, "output", self.out_shape, out)
        return self._builder(g, inp, out)

    def __repr__(self):
        return f"Proc({self.name}: {self.in_shape} -> {self.out_shape})"


def _check_port(proc, role, shape, port):
    if shape is None:
        if port is not None:
            raise ShapeError(f"{proc.name} has no {role} port")
    elif port is None or port.shape != shape:
        got = None if port is None else port.shape
        raise ShapeError(f"{proc.name} {role} expects {shape}, got {got}")


def leaf(name, in_shape, out_shape, body):
    """Template for a single process; ``body(inp, out, node)`` is a generator."""
    def builder(g, inp, out):
        node = Node(g.unique(name))
        node.body = lambda: body(inp, out, node)
        return node
    return Proc(name, in_shape, out_shape, builder)


def lift(fn, in_shape=ITEM, out_shape=ITEM, name=None, ops=1):
    """Refine a pure function into a receive-compute-send process."""
    def body(inp, out, node):
        v = yield from recv(inp)
        yield Work(ops)
        yield from send(out, fn(v))
    return leaf(name or getattr(fn, "__name__", "fn"), in_shape, out_shape, body)


def lift2(fn, name=None, a=ITEM, b=ITEM, out_shape=ITEM, ops=1):
    """Binary stage: ``Bundle(a, b) -> out_shape``."""
    return lift(lambda ab: fn(ab[0], ab[1]), Bundle(a, b), out_shape,
                name or getattr(fn, "__name__", "fn2"), ops)


def identity(shape=ITEM, name="id"):
    return lift(lambda v: v, shape, shape, name, ops=0)


# -- composition -------------------------------------------------------------

def feed(p, q):
    """``p ▷ q``: run both concurrently, p's output wired to q's input.

    The connecting channels are created per build and are not visible on the
    composite's interface.
    """
    if p.out_shape is None or p.out_shape != q.in_shape:
        raise ShapeError(
            f"cannot feed {p.name} (output {p.out_shape}) into {q.name} (input {q.in_shape})")

    def builder(g, inp, out):
        mid = g.port(p.out_shape, "mid")
        return Node(g.unique("feed"), children=[p.build(g, inp, mid), q.build(g, mid, out)],
                    is_process=False)
    return Proc(f"({p.name} > {q.name})", p.in_shape, q.out_shape, builder)


def chain(*procs):
    out = procs[0]
    for p in procs[1:]:
        out = feed(out, p)
    return out


def _split(shapes):
    present = [s for s in shapes if s is not None]
    if not present:
        return None
    if len(present) == 1:
        return present[0]
    return Bundle(*present)


def par(*procs):
    """Parallel composition; present ports are bundled in argument order."""
    in_shape = _split([p.in_shape for p in procs])
    out_shape = _split([p.out_shape for p in procs])

    def pick(port, shapes):
        present = [i for i, s in enumerate(shapes) if s is not None]
        res = [None] * len(shapes)
        if len(present) == 1:
            res[present[0]] = port
        else:
            for j, i in enumerate(present):
                res[i] = port[j]
        return res

    def builder(g, inp, out):
        ins = pick(inp, [p.in_shape for p in procs])
        outs = pick(out, [p.out_shape for p in procs])
        return Node(g.unique("par"),
                    children=[p.build(g, i, o) for p, i, o in zip(procs, ins, outs)],
                    is_process=False)
    return Proc("(" + " || ".join(p.name for p in procs) + ")", in_shape, out_shape, builder)


def wired(name, in_shape, out_shape, wiring):
    """Composite with explicit wiring: ``wiring(g, inp, out)`` returns child nodes."""
    def builder(g, inp, out):
        return Node(g.unique(name), children=wiring(g, inp, out), is_process=False)
    return Proc(name, in_shape, out_shape, builder)


# -- utility processes ---------------------------------------------------------

def produce(shape, value, name="prd"):
    """PRD: emit ``value`` on a port of ``shape``.

    Vectors and bundles are produced by one producer per component running in
    parallel; a stream producer sends its elements in order and then a single
    end-of-transmission message.
    """
    if isinstance(shape, Vector):
        if len(value) != shape.n:
            raise ShapeError(f"produce: {shape} needs {shape.n} values, got {len(value)}")
        parts = [produce(shape.inner, v, name) for v in value]

        def vbuilder(g, inp, out):
            return Node(g.unique(name + "v"),
                        children=[p.build(g, None, o) for p, o in zip(parts, out.elements)],
                        is_process=False)
        return Proc(name, None, shape, vbuilder)
    if isinstance(shape, Bundle):
        if len(value) != len(shape.parts):
            raise ShapeError(f"produce: {shape} needs {len(shape.parts)} parts")
        parts = [produce(s, v, name) for s, v in zip(shape.parts, value)]

        def bbuilder(g, inp, out):
            return Node(g.unique(name + "b"),
                        children=[p.build(g, None, o) for p, o in zip(parts, out.parts)],
                        is_process=False)
        return Proc(name, None, shape, bbuilder)
    if isinstance(shape, Stream):
        value = list(value)
        if shape.inner.static:
            for v in value:
                flatten_value(shape.inner, v, [])

    def body(inp, out, node):
        yield from send(out, value)
    return leaf(name, None, shape, body)


def produce_item(value, name="prd"):
    return produce(ITEM, value, name)


def produce_stream(values, inner=ITEM, name="prd"):
    return produce(Stream(inner), values, name)


def produce_vector(values, inner=ITEM, name="prd"):
    return produce(Vector(len(values), inner), values, name)


def store(shape, key="out", name="store"):
    """STORE: receive one construct and keep it as network output ``key``."""
    def builder(g, inp, out):
        if key in g.outputs:
            raise ShapeError(f"duplicate output name {key!r}")
        node = Node(g.unique(name))

        def body():
            node.value = yield from recv(inp)
        node.body = body
        g.outputs[key] = node
        return node
    return Proc(name, shape, None, builder)


def store_item(key="out"):
    return store(ITEM, key)


def store_stream(inner=ITEM, key="out"):
    return store(Stream(inner), key)


def store_vector(n, inner=ITEM, key="out"):
    return store(Vector(n, inner), key)


def sink(shape, name="sink"):
    """Consume and discard one construct (a whole stream, up to its EOT)."""
    def body(inp, out, node):
        if isinstance(inp, StreamPort):
            yield from recv_stream(inp)
        else:
            yield from recv(inp)
    return leaf(name, shape, None, body)


def relay(shape, name="relay"):
    """Forward a construct unchanged (element by element for streams)."""
    def body(inp, out, node):
        if isinstance(inp, StreamPort):
            while (yield from next_or_eot(inp)):
                v = yield from recv(inp.elements)
                yield from send(out.elements, v)
            yield Send(out.eot, True)
        else:
            v = yield from recv(inp)
            yield from send(out, v)
    return leaf(name, shape, shape, body)


def broadcast(shape, n, name="broadcast"):
    """Deliver every message received on the input once on each of ``n`` outputs."""
    if n < 1:
        raise ShapeError("broadcast needs at least one output")

    def body(inp, out, node):
        if isinstance(inp, StreamPort):
            copies = VectorPort([o.elements for o in out.elements])
            while (yield from next_or_eot(inp)):
                v = yield from recv(inp.elements)
                yield from send(copies, [v] * n)
            yield SendAll([o.eot for o in out.elements], [True] * n)
        else:
            v = yield from recv(inp)
            yield from send(out, [v] * n)
    return leaf(name, shape, Vector(n, shape), body)


def segs(width, total_bits, name="segs"):
    """Split a ``total_bits``-wide integer into ``width``-bit words, least significant first."""
    if width <= 0 or total_bits % width:
        raise ShapeError(f"segs: {total_bits} bits is not a multiple of {width}")
    n = total_bits // width
    mask = (1 << width) - 1
    return lift(lambda wide: [(wide >> (width * i)) & mask for i in range(n)],
                ITEM, Vector(n, ITEM), name)


# -- closed networks ----------------------------------------------------------

@dataclass
class Instance:
    root: Node
    graph: Graph

    @property
    def process_count(self):
        return self.root.process_count()

    @property
    def channel_count(self):
        return len(self.graph.channels)


@dataclass
class RunResult:
    outputs: dict
    instance: Instance
    kernel: object
    eot_counts: dict = field(default_factory=dict)

    @property
    def total_cycles(self):
        return self.kernel.max_clock


class Network:
    """A closed process (no free ports) ready to be built and run."""

    def __init__(self, proc, capacity=0):
        if proc.in_shape is not None or proc.out_shape is not None:
            raise ShapeError(
                f"network is not closed: {proc.name} has ports {proc.in_shape} -> {proc.out_shape}")
        self.proc = proc
        self.capacity = capacity

    def build(self):
        g = Graph(self.capacity)
        root = self.proc.build(g)
        return Instance(root, g)

    def run(self, engine="sim", seed=None, costs=None, timeout=60.0, instance=None):
        inst = instance or self.build()
        if engine == "sim":
            k = SimEngine(costs, seed)
        elif engine == "threads":
            k = ThreadEngine(costs, timeout)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        k.run([(inst.root.run(), inst.root)])
        g = inst.graph
        leftover = [ch.name for ch in g.channels if ch.full]
        if leftover:
            raise DeadlockError([], leftover)
        eots = {}
        for s in g.streams:
            eots[s.eot.name] = s.eot_count
            if not s.nested and s.eot_count != 1:
                raise ProtocolError(f"stream {s.eot.name} saw {s.eot_count} EOT messages")
        outputs = {key: node.value for key, node in g.outputs.items()}
        return RunResult(outputs, inst, k, eots)


def run(proc, **kw):
    """Build and run a closed process; returns the outputs dict."""
    capacity = kw.pop("capacity", 0)
    return Network(proc, capacity).run(**kw).outputs
