"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even
under output capture) or directly with ``python tests/test_acceptance.py``.
"""

import operator
import random
import sys
import time

import pytest

import oracles
from serpent_csp import serpent as s
from serpent_csp.cli import load_kats
from serpent_csp.kernel import DeadlockError, NetworkError
from serpent_csp.metrics import compare_designs, fold_stage_overlap, run_with_metrics
from serpent_csp.networks import (ciphertexts, encryption_design,
                                  keyschedule_design)
from serpent_csp.ports import ITEM, Bundle, Stream, Vector
from serpent_csp.process import (Network, chain, lift, lift2, produce,
                                 store_stream, store_vector)
from serpent_csp.skeletons import smap, svfoldl, szipwith, vmap, vvfoldl, vzipwith

# KAT file vectors 1-5 are the published ones
PUBLISHED_KATS = 5


@pytest.fixture
def report(capsys):
    """Print the verdict line past output capture, then assert it."""
    def emit(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def random_blocks(r, n):
    return [tuple(r.getrandbits(32) for _ in range(4)) for _ in range(n)]


def test_kat_conformance(report):
    t0 = time.perf_counter()
    kats = load_kats()[:PUBLISHED_KATS]
    bad = []
    for vid, bits, k, p, c in kats:
        key = s.pad_key(k, bits)
        if s.encrypt_standard(key, p) != c or s.decrypt_standard(key, c) != p:
            bad.append(vid)
    dt = time.perf_counter() - t0
    sizes = sorted({v[1] for v in kats})
    ok = not bad and len(kats) >= 4 and sizes == [128, 192, 256] and dt < 1.0
    report("KAT conformance", ok,
           f"{len(kats) - len(bad)}/{len(kats)} published vectors, key sizes {sizes}, {dt:.3f}s")


def test_inverse_law(report):
    r = random.Random(1001)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(1000):
        bits = r.choice((128, 192, 256))
        ks = s.key_schedule(s.pad_key(r.getrandbits(bits), bits))
        b = tuple(r.getrandbits(32) for _ in range(4))
        failures += s.decrypt_block(ks, s.encrypt_block(ks, b)) != b
    dt = time.perf_counter() - t0
    report("Inverse law", failures == 0 and dt < 10.0,
           f"1000 random (key, block) pairs, {failures} failures, {dt:.2f}s")


def test_refinement_equivalence(report):
    r = random.Random(2002)
    t0 = time.perf_counter()
    mismatched = []
    combos = 0
    for ks in ("KS1", "KS2"):
        for design, n in (("ENC1", None), ("ENC2", None), ("ENC3", 1), ("ENC3", 2),
                          ("ENC3", 5), ("ENC3", 31)):
            key = s.pad_key(r.getrandbits(256), 256)
            blocks = random_blocks(r, 100)
            got = ciphertexts(encryption_design(key, blocks, design, n, ks).run())
            combos += 1
            if got != s.encrypt_blocks(key, blocks):
                mismatched.append(f"{ks}/{design}{'' if n is None else f'({n})'}")
    dt = time.perf_counter() - t0
    report("Refinement equivalence", not mismatched and dt < 120,
           f"{combos - len(mismatched)}/{combos} design pairs exact on 100 blocks, {dt:.1f}s")


def _run(p):
    return Network(p).run().outputs["out"]


def _skeleton_instance(name, r):
    """One randomized instance: returns (network output, oracle value)."""
    word = lambda: r.getrandbits(32)  # noqa: E731
    if name == "smap":
        xs = [word() for _ in range(r.randint(0, 256))]
        f = lift(lambda x: (x * 3 + 1) & 0xFFFFFFFF, name="affine")
        return _run(chain(produce(Stream(ITEM), xs), smap(f), store_stream())), \
            [(x * 3 + 1) & 0xFFFFFFFF for x in xs]
    if name == "vmap":
        xs = [word() for _ in range(r.randint(1, 256))]
        f = lift(lambda x: x ^ 0xA5A5A5A5, name="mask")
        return _run(chain(produce(Vector(len(xs), ITEM), xs), vmap(len(xs), f), store_vector(len(xs)))), \
            [x ^ 0xA5A5A5A5 for x in xs]
    if name == "szipwith":
        m = r.randint(0, 256)
        a, b = [word() for _ in range(m)], [word() for _ in range(m)]
        p = chain(produce(Bundle(Stream(ITEM), Stream(ITEM)), (a, b)),
                  szipwith(lift2(operator.xor, "xor")), store_stream())
        return _run(p), [x ^ y for x, y in zip(a, b)]
    if name == "vzipwith":
        m = r.randint(1, 256)
        a, b = [word() for _ in range(m)], [word() for _ in range(m)]
        p = chain(produce(Bundle(Vector(m, ITEM), Vector(m, ITEM)), (a, b)),
                  vzipwith(m, lift2(operator.add, "add")), store_vector(m))
        return _run(p), [x + y for x, y in zip(a, b)]
    op, fn = r.choice(((operator.xor, "xor"), (operator.add, "add")))
    stage = lift2(op, fn)
    if name == "vvfoldl":
        accs = [word() for _ in range(r.randint(0, 256))]
        args = [word() for _ in range(r.randint(1, 8))]
        p = chain(produce(Bundle(Stream(ITEM), Vector(len(args), ITEM)), (accs, args)),
                  vvfoldl(len(args), stage), store_stream())
        return _run(p), [oracles.foldl(op, a, args) for a in accs]
    # svfoldl: the argument stream carries the random length
    accs = [word() for _ in range(r.randint(0, 4))]
    args = [word() for _ in range(r.randint(0, 256))]
    p = chain(produce(Bundle(Stream(ITEM), Stream(ITEM)), (accs, args)), svfoldl(stage), store_stream())
    return _run(p), [oracles.foldl(op, a, args) for a in accs]


def test_skeleton_laws(report):
    r = random.Random(3003)
    names = ["smap", "vmap", "szipwith", "vzipwith", "vvfoldl", "svfoldl"]
    counts = {}
    for name in names:
        good = 0
        for _ in range(200):
            got, expect = _skeleton_instance(name, r)
            good += got == expect
        counts[name] = good
    ok = all(v == 200 for v in counts.values())
    report("Skeleton laws", ok, ", ".join(f"{k} {v}/200" for k, v in counts.items()))


def test_sbox_integrity(report):
    problems = []
    for i, table in enumerate(s.SBOXES):
        inv = s.invert_table(table)
        if sorted(table) != list(range(16)) or sorted(inv) != list(range(16)):
            problems.append(f"S{i} not a bijection")
        if any(inv[table[x]] != x or table[inv[x]] != x for x in range(16)):
            problems.append(f"S{i} inverse mismatch")
        r = random.Random(i)
        for _ in range(20):
            b = tuple(r.getrandbits(32) for _ in range(4))
            if s.inv_sbox(i, s.sbox(i, b)) != b:
                problems.append(f"bitsliced S{i} not inverted")
                break
    listing = oracles.s0_table_from_listing()
    if listing != s.SBOXES[0]:
        problems.append("s0 boolean listing differs from the S0 table")
    report("S-box integrity", not problems,
           "8 S-boxes and inverses bijective and mutually inverse; s0 listing table "
           f"{listing[:4]}... matches" if not problems else "; ".join(problems))


def test_stream_protocol_and_termination(report):
    r = random.Random(4004)
    key = s.pad_key(r.getrandbits(256), 256)
    blocks = random_blocks(r, 5)
    designs = [keyschedule_design(key, "KS1"), keyschedule_design(key, "KS2")]
    for ks in ("KS1", "KS2"):
        for design, n in (("ENC1", None), ("ENC2", None), ("ENC3", 1), ("ENC3", 2), ("ENC3", 31)):
            for lanes in (1, 2):
                designs.append(encryption_design(key, blocks, design, n, ks, lanes, capacity=lanes - 1))
    deadlocks = bad_eot = unclean = 0
    streams = 0
    for d in designs:
        try:
            res = d.run()
        except DeadlockError:
            deadlocks += 1
            continue
        except NetworkError:
            bad_eot += 1
            continue
        top = [st for st in res.instance.graph.streams if not st.nested]
        streams += len(top)
        bad_eot += sum(st.eot_count != 1 for st in top)
        k = res.kernel
        unclean += k.live != 0 or any(ch.full or ch.sender or ch.receiver
                                      for ch in res.instance.graph.channels)
    ok = deadlocks == 0 and bad_eot == 0 and unclean == 0
    report("Stream protocol and termination", ok,
           f"{len(designs)} design runs, {streams} streams with exactly one EOT, "
           f"{deadlocks} deadlocks, {unclean} non-quiescent endings")


def test_throughput_ordering(report):
    r = random.Random(5005)
    key = s.pad_key(r.getrandbits(256), 256)
    blocks = random_blocks(r, 32)
    designs = ["ENC1", "ENC3(2)", "ENC2"] + [f"ENC3({n})" for n in range(1, 9)]
    rows = compare_designs(key, blocks, designs)
    again = compare_designs(key, blocks, designs, seed=7)
    cpb = {row["design"]: row["cycles_per_block"] for row in rows}
    sweep = [cpb[f"ENC3({n})"] for n in range(1, 9)]
    ordered = cpb["ENC1"] <= cpb["ENC3(2)"] <= cpb["ENC2"]
    monotone = all(a >= b for a, b in zip(sweep, sweep[1:]))
    deterministic = rows == again
    report("Throughput ordering", ordered and monotone and deterministic,
           f"cycles/block ENC1={cpb['ENC1']} ENC3(2)={cpb['ENC3(2)']} ENC2={cpb['ENC2']}; "
           f"ENC3(1..8)={sweep}; deterministic={deterministic}")


def test_pipelining_evidence(report):
    r = random.Random(6006)
    key = s.pad_key(r.getrandbits(128), 128)
    blocks = random_blocks(r, 8)
    d = encryption_design(key, blocks, "ENC1", capacity=1)
    res = d.run()
    overlap = fold_stage_overlap(res.kernel)
    correct = ciphertexts(res) == s.encrypt_blocks(key, blocks)
    _, rep = run_with_metrics(d)
    report("Pipelining evidence", overlap >= 2 and correct,
           f"ENC1 with {len(blocks)} blocks in flight: {overlap} fold stages active in one cycle "
           f"(max concurrent work intervals {rep.max_concurrent_active})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
