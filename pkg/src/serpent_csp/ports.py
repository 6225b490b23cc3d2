"""Data refinements: port shapes and the channel bundles that realize them.

A list refines either to a :class:`Stream` (one message per element on an
elements channel, then a single end-of-transmission message on a separate
channel) or to a :class:`Vector` (one channel per element, all used in the
same step). :class:`Item` is a single channel and :class:`Bundle` groups
heterogeneous ports side by side. Shapes nest freely, e.g.
``Stream(Vector(4, ITEM))`` is a stream of 4-word blocks.

Values travelling through ports are plain Python objects: an item is any
value, a vector is a list, a bundle is a tuple and a stream is a list.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import Channel, Par, Recv, RecvAll, Select, Send, SendAll


class ShapeError(ValueError):
    """Raised at construction time when port shapes do not line up."""


class Shape:
    static = True

    def leaf_count(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Item(Shape):
    def leaf_count(self):
        return 1

    def __str__(self):
        return "Item"


ITEM = Item()


@dataclass(frozen=True)
class Stream(Shape):
    inner: Shape

    static = False

    def __str__(self):
        return f"Stream[{self.inner}]"


@dataclass(frozen=True)
class Vector(Shape):
    n: int
    inner: Shape

    def __post_init__(self):
        if self.n < 1:
            raise ShapeError(f"vector length must be positive, got {self.n}")
        object.__setattr__(self, "static", self.inner.static)

    def leaf_count(self):
        return self.n * self.inner.leaf_count()

    def __str__(self):
        return f"Vector[{self.n}, {self.inner}]"


@dataclass(frozen=True)
class Bundle(Shape):
    parts: tuple

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))
        object.__setattr__(self, "static", all(p.static for p in parts))

    def leaf_count(self):
        return sum(p.leaf_count() for p in self.parts)

    def __str__(self):
        return "Bundle(" + ", ".join(str(p) for p in self.parts) + ")"


def flatten_value(shape, value, out):
    """Append the leaf values of a static ``value`` to ``out``."""
    if isinstance(shape, Item):
        out.append(value)
    elif isinstance(shape, Vector):
        if len(value) != shape.n:
            raise ShapeError(f"expected {shape.n} elements for {shape}, got {len(value)}")
        inner = shape.inner
        if isinstance(inner, Item):
            out.extend(value)
        else:
            for v in value:
                flatten_value(inner, v, out)
    elif isinstance(shape, Bundle):
        if len(value) != len(shape.parts):
            raise ShapeError(f"expected {len(shape.parts)} parts for {shape}")
        for p, v in zip(shape.parts, value):
            flatten_value(p, v, out)
    else:
        raise ShapeError(f"{shape} is not static")
    return out


def unflatten_value(shape, it):
    if isinstance(shape, Item):
        return next(it)
    if isinstance(shape, Vector):
        return [unflatten_value(shape.inner, it) for _ in range(shape.n)]
    return tuple(unflatten_value(p, it) for p in shape.parts)


# -- ports --------------------------------------------------------------------

class Port:
    shape: Shape

    def channels(self):
        """Every channel of the bundle, end-of-transmission channels included."""
        raise NotImplementedError


class ItemPort(Port):
    __slots__ = ("channel", "shape")

    def __init__(self, channel):
        self.channel = channel
        self.shape = ITEM

    def channels(self):
        return [self.channel]


class StreamPort(Port):
    """Elements port plus a dedicated end-of-transmission channel.

    ``eot_count`` and ``closed`` are maintained by the kernel for protocol
    checks. ``nested`` marks a stream that lives inside another stream's
    elements and is therefore legitimately terminated once per outer element.
    """

    def __init__(self, elements, eot, nested=False):
        self.elements = elements
        self.eot = eot
        self.shape = Stream(elements.shape)
        self.nested = nested
        self.eot_count = 0
        self.closed = False
        eot.stream = self
        eot.is_eot = True
        if elements.shape.static:
            for ch in elements.channels():
                ch.stream = self
        self.guard = elements.channels()

    def channels(self):
        return self.elements.channels() + [self.eot]


class VectorPort(Port):
    def __init__(self, elements):
        if not elements:
            raise ShapeError("vector port needs at least one element")
        inner = elements[0].shape
        for e in elements[1:]:
            if e.shape != inner:
                raise ShapeError(f"vector elements disagree: {inner} vs {e.shape}")
        self.elements = list(elements)
        self.shape = Vector(len(elements), inner)
        self.leaves = self.channels()

    def __getitem__(self, i):
        return self.elements[i]

    def __len__(self):
        return len(self.elements)

    def channels(self):
        return [c for e in self.elements for c in e.channels()]


class BundlePort(Port):
    def __init__(self, parts):
        self.parts = list(parts)
        self.shape = Bundle(*(p.shape for p in parts))
        self.leaves = self.channels()

    def __getitem__(self, i):
        return self.parts[i]

    def __len__(self):
        return len(self.parts)

    def channels(self):
        return [c for p in self.parts for c in p.channels()]


def make_port(shape, new_channel, name="p", nested=False):
    """Allocate a port of ``shape``; ``new_channel(name)`` creates each leaf."""
    if isinstance(shape, Item):
        return ItemPort(new_channel(name))
    if isinstance(shape, Stream):
        elements = make_port(shape.inner, new_channel, name + ".el", True)
        return StreamPort(elements, new_channel(name + ".eot"), nested)
    if isinstance(shape, Vector):
        return VectorPort([make_port(shape.inner, new_channel, f"{name}[{i}]", nested)
                           for i in range(shape.n)])
    if isinstance(shape, Bundle):
        return BundlePort([make_port(p, new_channel, f"{name}.{i}", nested)
                           for i, p in enumerate(shape.parts)])
    raise ShapeError(f"unknown shape {shape!r}")


def standalone_port(shape, name="p", capacity=0):
    return make_port(shape, lambda n: Channel(n, capacity), name)


def transpose(port):
    """Regroup a bundle of equal-length vectors into a vector of bundles.

    Pure rewiring: the returned port shares the original channels.
    """
    if not isinstance(port, BundlePort) or not all(isinstance(p, VectorPort) for p in port.parts):
        raise ShapeError(f"transpose needs a bundle of vectors, got {port.shape}")
    n = {len(p) for p in port.parts}
    if len(n) != 1:
        raise ShapeError(f"transpose needs equal-length vectors, got {port.shape}")
    return VectorPort([BundlePort([p[i] for p in port.parts]) for i in range(n.pop())])


# -- generic transfers ---------------------------------------------------------

def send(port, value):
    """Generator: send ``value`` over ``port`` following its refinement."""
    if isinstance(port, ItemPort):
        yield Send(port.channel, value)
    elif isinstance(port, StreamPort):
        for v in value:
            yield from send(port.elements, v)
        yield Send(port.eot, True)
    elif port.shape.static:
        yield SendAll(port.leaves, flatten_value(port.shape, value, []))
    else:
        subs = port.elements if isinstance(port, VectorPort) else port.parts
        if len(value) != len(subs):
            raise ShapeError(f"expected {len(subs)} parts for {port.shape}, got {len(value)}")
        yield Par([send(p, v) for p, v in zip(subs, value)])


def recv(port):
    """Generator: receive one value from ``port``; returns it."""
    if isinstance(port, ItemPort):
        return (yield Recv(port.channel))
    if isinstance(port, StreamPort):
        return (yield from recv_stream(port))
    if port.shape.static:
        values = yield RecvAll(port.leaves)
        return unflatten_value(port.shape, iter(values))
    if isinstance(port, VectorPort):
        return list((yield Par([recv(p) for p in port.elements])))
    return tuple((yield Par([recv(p) for p in port.parts])))


def recv_stream(port, each=None):
    """Receive a whole stream. ``each(value)`` is called per element if given."""
    out = []
    guards = (port.guard, (port.eot,))
    elements = port.elements
    while True:
        g = yield Select(guards)
        if g == 0:
            v = yield from recv(elements)
            if each is not None:
                each(v)
            out.append(v)
        else:
            yield Recv(port.eot)
            return out


def next_or_eot(port):
    """Generator: wait for the next stream event.

    Returns ``True`` if an element is pending (not yet consumed) and ``False``
    after consuming the end-of-transmission message.
    """
    g = yield Select((port.guard, (port.eot,)))
    if g == 0:
        return True
    yield Recv(port.eot)
    return False
