"""Serpent as process networks.

Two key-schedule designs and three encryption designs, each assembled from
skeletons and checked against :mod:`serpent_csp.serpent`:

``KS1``
    segments the padded key, generates the prekeys, then runs 32 S-box
    processes side by side (four groups of eight) plus one trailing S3.
``KS2``
    the same, but the eight S-box processes are reused over a stream of four
    prekey groups.
``ENC1``
    31 pipelined SERPENTFOLD stages (VVFOLDL) then the final mixing.
``ENC2``
    one SERPENTFOLD instance driven by a stream of subkeys (SVFOLDL).
``ENC3(n)``
    ``n`` pipelined stages followed by one streamed stage for the other
    ``31 - n`` rounds.

Blocks travel as ``Vector(4, Item)`` (lists of four words). A full
encryption network runs ``lanes`` copies of the chosen design: the block
stream is dealt round-robin across lanes and collected back in order.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

from . import serpent
from .kernel import Par, Send, SendAll
from .ports import (ITEM, Bundle, BundlePort, ShapeError, Stream, Vector,
                    next_or_eot, recv, recv_stream, send, transpose)
from .process import (Network, Node, Proc, broadcast, feed, leaf, lift, lift2,
                      par, produce_item, produce_stream, segs, store,
                      wired)
from .skeletons import sbind, smap, svfoldl, szipwith, vmap, vmapwith, vvfoldl, vzipwith

BLOCK = Vector(4, ITEM)
FOLD_ARG = Bundle(ITEM, BLOCK)
KS1_SHAPE = Bundle(Vector(4, Vector(8, BLOCK)), BLOCK)
KS2_SHAPE = Bundle(Stream(Vector(8, BLOCK)), BLOCK)

KS_DESIGNS = ("KS1", "KS2")
ENC_DESIGNS = ("ENC1", "ENC2", "ENC3")
ROUND_INDICES = [i % 8 for i in range(31)]


# -- primitive stages ------------------------------------------------------------

EXOR = lift2(operator.xor, "EXOR")
EXOR4 = vzipwith(4, EXOR)


def sbox_proc(i):
    return lift(lambda b: list(serpent.sbox(i, b)), BLOCK, BLOCK, f"S{i}")


def lt_proc():
    return lift(lambda b: list(serpent.linear_transform(b)), BLOCK, BLOCK, "LT")


def pair_proc():
    """Joins an index and a subkey group into one fold argument."""
    return lift(lambda ab: ab, FOLD_ARG, FOLD_ARG, "PAIR", ops=0)


def serpentfold():
    """SERPENTFOLD: ``Bundle(block, Bundle(index, subkeys)) -> block``.

    A controller reads the round index and then runs the key mixing
    (VZIPWITH4(EXOR)), the selected S-box and the linear transform as one
    feed chain. All eight S-box processes are part of the circuit; only the
    selected one takes part in a given round.
    """
    def builder(g, inp, out):
        acc, idx, key = inp[0], inp[1][0], inp[1][1]
        mixed = g.port(BLOCK, "mix")
        subbed = g.port(BLOCK, "sub")
        xor = EXOR4.build(g, BundlePort([acc, key]), mixed)
        boxes = [sbox_proc(i).build(g, mixed, subbed) for i in range(8)]
        lt = lt_proc().build(g, subbed, out)
        node = Node(g.unique("SERPENTFOLD"), children=[xor, *boxes, lt])

        def body():
            i = yield from recv(idx)
            yield Par([xor, boxes[i], lt])
        node.body = body
        return node
    return Proc("SERPENTFOLD", Bundle(BLOCK, FOLD_ARG), BLOCK, builder)


# -- key schedule -----------------------------------------------------------------

def _prekeys_from_words(words):
    return serpent.generate_prekeys(serpent.Key256(tuple(words), 256))


def _blocks(ws):
    return [list(ws[4 * j:4 * j + 4]) for j in range(len(ws) // 4)]


def generatews(out_shape):
    """GENERATEWS: eight key words in, 132 prekeys out as 33 blocks (32 grouped by eight)."""
    def fn(words):
        bl = _blocks(_prekeys_from_words(words))
        return ([bl[8 * q:8 * q + 8] for q in range(4)], bl[32])
    return lift(fn, Vector(8, ITEM), out_shape, "GENERATEWS", ops=132)


def _group_sboxes():
    return vmapwith([sbox_proc(i) for i in serpent.KEY_SBOX_ORDER])


def _key_source(key):
    key = _padded(key)
    return feed(produce_item(key.value, "PRD"), segs(32, 256))


def _padded(key):
    if isinstance(key, serpent.Key256):
        return key
    return serpent.pad_key(key, 256)


def keyschedule_net_v1(key):
    """KS1: ``PRD ▷ SEGS ▷ GENERATEWS ▷ (VMAP4(VMAPWITH(S-boxes)) ∥ S3)``."""
    p = feed(feed(_key_source(key), generatews(KS1_SHAPE)),
             par(vmap(4, _group_sboxes()), sbox_proc(3)))
    p.name = "KS1"
    return p


def keyschedule_net_v2(key):
    """KS2: as KS1 but with ``SMAP(VMAPWITH(S-boxes))`` over a stream of groups."""
    p = feed(feed(_key_source(key), generatews(KS2_SHAPE)),
             par(smap(_group_sboxes()), sbox_proc(3)))
    p.name = "KS2"
    return p


def keyschedule_proc(key, design="KS1"):
    if design == "KS1":
        return keyschedule_net_v1(key)
    if design == "KS2":
        return keyschedule_net_v2(key)
    raise ShapeError(f"unknown key-schedule design {design!r}")


def flatten_schedule(value):
    """KS network output (either design) -> 33 groups of 4 words as tuples."""
    groups, last = value
    return [tuple(b) for grp in groups for b in grp] + [tuple(last)]


def run_keyschedule(key, design="KS1", **kw):
    proc = keyschedule_proc(key, design)
    out = Network(feed(proc, store(proc.out_shape, "ks")), kw.pop("capacity", 0)).run(**kw)
    return flatten_schedule(out.outputs["ks"])


# -- encryption segments -----------------------------------------------------------

def schedule_shape(design, n=None):
    """Shape of the subkeys handed to one encryption segment."""
    if design == "ENC1":
        return Bundle(Vector(31, BLOCK), BLOCK, BLOCK)
    if design == "ENC2":
        return Bundle(Stream(BLOCK), BLOCK, BLOCK)
    if design == "ENC3":
        _check_n(n)
        return Bundle(Vector(n, BLOCK), Stream(BLOCK), BLOCK, BLOCK)
    raise ShapeError(f"unknown encryption design {design!r}")


def schedule_value(design, n, groups):
    g = [list(b) for b in groups]
    if design in ("ENC1", "ENC2"):
        return (g[:31], g[31], g[32])
    return (g[:n], g[n:31], g[31], g[32])


def _check_n(n):
    if not isinstance(n, int) or not 1 <= n <= 31:
        raise ShapeError(f"ENC3 needs 1 <= n <= 31, got {n!r}")


def gather(n):
    """Collect a stream of exactly ``n`` items into a vector."""
    def body(inp, out, node):
        values = yield from recv_stream(inp)
        if len(values) != n:
            raise ShapeError(f"expected {n} stream elements, got {len(values)}")
        yield from send(out, values)
    return leaf(f"GATHER{n}", Stream(ITEM), Vector(n, ITEM), body)


def split(n):
    """First ``n`` items of a stream as a vector, the rest as a stream."""
    def body(inp, out, node):
        head = []
        while len(head) < n and (yield from next_or_eot(inp)):
            head.append((yield from recv(inp.elements)))
        if len(head) < n:
            raise ShapeError(f"stream ended after {len(head)} of {n} elements")
        # the head vector is released before the tail starts flowing
        yield from send(out[0], head)
        while (yield from next_or_eot(inp)):
            v = yield from recv(inp.elements)
            yield from send(out[1].elements, v)
        yield Send(out[1].eot, True)
    return leaf(f"SPLIT{n}", Stream(ITEM), Bundle(Vector(n, ITEM), Stream(ITEM)), body)


def _tail(g, rounds, k31, k32, out):
    """``SBIND(EXOR4)[k31] ▷ SMAP(S7) ▷ SBIND(EXOR4)[k32]``."""
    mixed = g.port(Stream(BLOCK), "k31")
    boxed = g.port(Stream(BLOCK), "s7")
    return [
        sbind(EXOR4).build(g, BundlePort([rounds, k31]), mixed),
        smap(sbox_proc(7)).build(g, mixed, boxed),
        sbind(EXOR4).build(g, BundlePort([boxed, k32]), out),
    ]


def _pipelined(g, k, blocks, idx_vec, keys, out):
    args = transpose(BundlePort([idx_vec, keys]))
    return vvfoldl(k, serpentfold()).build(g, BundlePort([blocks, args]), out)


def _streamed(g, blocks, idxs, keys, out):
    pairs = g.port(Stream(FOLD_ARG), "args")
    return [szipwith(pair_proc()).build(g, BundlePort([idxs, keys]), pairs),
            svfoldl(serpentfold()).build(g, BundlePort([blocks, pairs]), out)]


def segment_in_shape(design, n=None):
    return Bundle(Stream(BLOCK), Stream(ITEM), schedule_shape(design, n))


def serpenteseg_v1():
    """ENC1: fully pipelined, 31 fold stages."""
    def wiring(g, inp, out):
        blocks, idxs, keys = inp
        idx_vec = g.port(Vector(31, ITEM), "idx")
        rounds = g.port(Stream(BLOCK), "rounds")
        return [gather(31).build(g, idxs, idx_vec),
                _pipelined(g, 31, blocks, idx_vec, keys[0], rounds),
                *_tail(g, rounds, keys[1], keys[2], out)]
    return wired("SERPENTESEG1", segment_in_shape("ENC1"), Stream(BLOCK), wiring)


def serpenteseg_v2():
    """ENC2: a single fold stage reused for all 31 rounds."""
    def wiring(g, inp, out):
        blocks, idxs, keys = inp
        rounds = g.port(Stream(BLOCK), "rounds")
        return [*_streamed(g, blocks, idxs, keys[0], rounds),
                *_tail(g, rounds, keys[1], keys[2], out)]
    return wired("SERPENTESEG2", segment_in_shape("ENC2"), Stream(BLOCK), wiring)


def serpenteseg_v3(n):
    """ENC3(n): ``n`` pipelined stages then one streamed stage for the rest."""
    _check_n(n)

    def wiring(g, inp, out):
        blocks, idxs, keys = inp
        parts = g.port(Bundle(Vector(n, ITEM), Stream(ITEM)), "idx")
        head = g.port(Stream(BLOCK), "head")
        rounds = g.port(Stream(BLOCK), "rounds")
        return [split(n).build(g, idxs, parts),
                _pipelined(g, n, blocks, parts[0], keys[0], head),
                *_streamed(g, head, parts[1], keys[1], rounds),
                *_tail(g, rounds, keys[2], keys[3], out)]
    return wired(f"SERPENTESEG3({n})", segment_in_shape("ENC3", n), Stream(BLOCK), wiring)


def serpenteseg(design, n=None):
    if design == "ENC1":
        return serpenteseg_v1()
    if design == "ENC2":
        return serpenteseg_v2()
    if design == "ENC3":
        return serpenteseg_v3(n)
    raise ShapeError(f"unknown encryption design {design!r}")


# -- lanes ------------------------------------------------------------------------

def distribute(ks_design, design, n, lanes):
    """Receive a key schedule and hand every lane the subkeys in its format."""
    shape = schedule_shape(design, n)
    in_shape = KS1_SHAPE if ks_design == "KS1" else KS2_SHAPE

    def body(inp, out, node):
        groups = flatten_schedule((yield from recv(inp)))
        yield from send(out, [schedule_value(design, n, groups)] * lanes)
    return leaf("DIST", in_shape, Vector(lanes, shape), body)


def deal(lanes):
    """Round-robin a block stream over ``lanes`` streams."""
    def body(inp, out, node):
        i = 0
        while (yield from next_or_eot(inp)):
            v = yield from recv(inp.elements)
            yield from send(out[i].elements, v)
            i = (i + 1) % lanes
        yield SendAll([o.eot for o in out.elements], [True] * lanes)
    return leaf("DEAL", Stream(BLOCK), Vector(lanes, Stream(BLOCK)), body)


def collect(lanes):
    """Inverse of :func:`deal`: merge lane streams back into input order."""
    def body(inp, out, node):
        i = 0
        while (yield from next_or_eot(inp[i])):
            v = yield from recv(inp[i].elements)
            yield from send(out.elements, v)
            i = (i + 1) % lanes
        # lane i has ended, so every other lane is at its EOT as well
        for j in range(lanes):
            if j != i:
                yield from recv_stream(inp[j])
        yield Send(out.eot, True)
    return leaf("COLLECT", Vector(lanes, Stream(BLOCK)), Stream(BLOCK), body)


def timed_store(key="out"):
    """STORE for the ciphertext stream; records when each block arrives."""
    base = store(Stream(BLOCK), key)

    def builder(g, inp, out):
        ch = inp.elements.channels()[0]
        ch.times = []
        g.timing = ch
        return base.build(g, inp, out)
    return Proc("STORE", Stream(BLOCK), None, builder)


def serpent_encrypt_proc(key, blocks, design="ENC1", n=None, ks_design="KS1", lanes=1):
    """Closed network: key schedule ▷ lanes of the chosen design ▷ store."""
    if ks_design not in KS_DESIGNS:
        raise ShapeError(f"unknown key-schedule design {ks_design!r}")
    if design not in ENC_DESIGNS:
        raise ShapeError(f"unknown encryption design {design!r}")
    if design == "ENC3":
        _check_n(n)
    elif n is not None:
        raise ShapeError(f"n only applies to ENC3, not {design}")
    if lanes < 1:
        raise ShapeError(f"lanes must be >= 1, got {lanes}")
    blocks = [list(b) for b in blocks]
    ks = keyschedule_proc(key, ks_design)
    seg = serpenteseg(design, n)
    fmt = schedule_shape(design, n)

    def wiring(g, inp, out):
        ks_out = g.port(ks.out_shape, "ks")
        keys = g.port(Vector(lanes, fmt), "keys")
        idx_src = g.port(Stream(ITEM), "idx")
        idx = g.port(Vector(lanes, Stream(ITEM)), "idx")
        blk_src = g.port(Stream(BLOCK), "blocks")
        blk = g.port(Vector(lanes, Stream(BLOCK)), "blocks")
        lane_out = g.port(Vector(lanes, Stream(BLOCK)), "lane")
        result = g.port(Stream(BLOCK), "ct")
        nodes = [
            ks.build(g, None, ks_out),
            distribute(ks_design, design, n, lanes).build(g, ks_out, keys),
            produce_stream(ROUND_INDICES, ITEM, "PRD").build(g, None, idx_src),
            broadcast(Stream(ITEM), lanes).build(g, idx_src, idx),
            produce_stream(blocks, BLOCK, "PRD").build(g, None, blk_src),
            deal(lanes).build(g, blk_src, blk),
        ]
        for i in range(lanes):
            nodes.append(seg.build(g, BundlePort([blk[i], idx[i], keys[i]]), lane_out[i]))
        nodes.append(collect(lanes).build(g, lane_out, result))
        nodes.append(timed_store("ciphertext").build(g, result, None))
        return nodes
    label = design if design != "ENC3" else f"ENC3({n})"
    return wired(f"SERPENT[{ks_design}, {label}, lanes={lanes}]", None, None, wiring)


@dataclass
class NetworkDesign:
    """A chosen design together with the closed network that realizes it."""

    design_id: str
    parallelism: int | None
    network: Network
    ks_design: str = "KS1"
    lanes: int = 1
    block_count: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def label(self):
        if self.design_id == "ENC3":
            return f"ENC3({self.parallelism})"
        return self.design_id

    def run(self, **kw):
        return self.network.run(**kw)


def encryption_design(key, blocks, design="ENC1", n=None, ks_design="KS1", lanes=1, capacity=0):
    proc = serpent_encrypt_proc(key, blocks, design, n, ks_design, lanes)
    return NetworkDesign(design, n, Network(proc, capacity), ks_design, lanes, len(blocks))


def keyschedule_design(key, design="KS1", capacity=0):
    proc = keyschedule_proc(key, design)
    net = Network(feed(proc, store(proc.out_shape, "ks")), capacity)
    return NetworkDesign(design, None, net, design)


def ciphertexts(result):
    return [tuple(b) for b in result.outputs["ciphertext"]]


def serpent_encrypt_net(key, blocks, design="ENC1", n=None, ks_design="KS1", lanes=1,
                        capacity=0, **run_kw):
    """Encrypt ``blocks`` with a network design; returns blocks as tuples."""
    d = encryption_design(key, blocks, design, n, ks_design, lanes, capacity)
    return ciphertexts(d.run(**run_kw))


def serpent_encrypt_multiway(key, blocks, lanes, design="ENC1", n=None, ks_design="KS1", **kw):
    return serpent_encrypt_net(key, blocks, design, n, ks_design, lanes, **kw)


def parse_design(text):
    """``"ENC3(2)"`` or ``"ENC3:2"`` -> ``("ENC3", 2)``; plain ids give ``n=None``."""
    t = text.strip().upper()
    for sep in ("(", ":"):
        if sep in t:
            base, rest = t.split(sep, 1)
            rest = rest.rstrip(")")
            try:
                return base, int(rest)
            except ValueError:
                raise ShapeError(f"bad stage count in design {text!r}") from None
    return t, None
