"""Command-line interface: ``serpent-csp <command> [options]``.

Commands: ``encrypt``, ``decrypt``, ``keyschedule``, ``bench``, ``verify``,
``list-designs``. Data files are raw 16-byte blocks; each block is read as a
little-endian 128-bit number whose low 32 bits are word ``x0``. Keys are hex
numbers, most significant nibble first.

Exit status: 0 on success, 1 for I/O errors and failed verification, 2 for
bad arguments. Errors are reported as one line on stderr.
"""

from __future__ import annotations

import argparse
import random
import sys
from importlib import resources

import numpy as np

from . import serpent
from .kernel import NetworkError
from .metrics import CostModel, compare_designs, format_table, run_with_metrics
from .networks import (ENC_DESIGNS, KS_DESIGNS, keyschedule_design, parse_design,
                       serpent_encrypt_net)

DESIGNS = {
    "KS1": "key schedule: 32 parallel S-box processes plus a trailing S3",
    "KS2": "key schedule: one group of 8 S-box processes reused over a stream",
    "ENC1": "encryption: 31 pipelined fold stages",
    "ENC2": "encryption: one fold stage fed a stream of subkeys",
    "ENC3": "encryption: --n pipelined stages, then one streamed stage (1 <= n <= 31)",
}
DEFAULT_BENCH = ("ENC1", "ENC3(2)", "ENC2")


class UsageError(Exception):
    """Bad arguments; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -------------------------------------------------------------------

def parse_key(text, bits=None):
    t = (text or "").strip().lower()
    if t.startswith("0x"):
        t = t[2:]
    if not t or any(c not in "0123456789abcdef" for c in t):
        raise UsageError(f"key is not a hex string: {text!r}")
    if bits is None:
        if len(t) * 4 not in (128, 192, 256):
            raise UsageError(f"key has {len(t)} hex digits; expected 32, 48 or 64")
        bits = len(t) * 4
    elif len(t) * 4 != bits:
        raise UsageError(f"key has {len(t)} hex digits but --key-bits is {bits}")
    return serpent.pad_key(int(t, 16), bits)


def read_blocks(data):
    if len(data) % 16:
        raise UsageError(f"input length {len(data)} is not a multiple of 16 bytes")
    return [serpent.block_from_bytes(data[i:i + 16]) for i in range(0, len(data), 16)]


def write_blocks(blocks):
    return b"".join(serpent.block_to_bytes(b) for b in blocks)


def _columns(data):
    words = np.frombuffer(data, dtype="<u4").reshape(-1, 4)
    return tuple(np.ascontiguousarray(words[:, i]).astype(np.uint32) for i in range(4))


def _from_columns(cols):
    return np.stack(cols, axis=1).astype("<u4").tobytes()


def reference_transform(key, data, decrypt=False, mode="bitsliced"):
    """Encrypt or decrypt raw bytes without any network."""
    if len(data) % 16:
        raise UsageError(f"input length {len(data)} is not a multiple of 16 bytes")
    if not data:
        return b""
    if mode == "standard":
        fn = serpent.decrypt_standard if decrypt else serpent.encrypt_standard
        out = bytearray()
        for i in range(0, len(data), 16):
            x = int.from_bytes(data[i:i + 16], "little")
            out += fn(key, x).to_bytes(16, "little")
        return bytes(out)
    ks = serpent.key_schedule(key)
    fn = serpent.decrypt_columns if decrypt else serpent.encrypt_columns
    return _from_columns(fn(ks, _columns(data)))


def _design_args(args):
    design, n = parse_design(args.design)
    if args.n is not None:
        if design != "ENC3":
            raise UsageError("--n only applies to ENC3")
        if n is not None and n != args.n:
            raise UsageError(f"conflicting stage counts {n} and {args.n}")
        n = args.n
    if design not in ENC_DESIGNS:
        raise UsageError(f"unknown encryption design {args.design!r}")
    if design == "ENC3" and (n is None or not 1 <= n <= 31):
        raise UsageError("ENC3 needs --n between 1 and 31")
    return design, n


def _read_input(path):
    try:
        if path in (None, "-"):
            return sys.stdin.buffer.read()
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc.strerror}") from None


def _write_output(path, data):
    try:
        if path in (None, "-"):
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            with open(path, "wb") as f:
                f.write(data)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc.strerror}") from None


def _text_out(path, text):
    _write_output(path, text.encode())


# -- commands -----------------------------------------------------------------

def cmd_encrypt(args, decrypt=False):
    key = parse_key(args.key, args.key_bits)
    data = _read_input(args.input)
    if args.design is None:
        out = reference_transform(key, data, decrypt, args.mode)
    else:
        if decrypt:
            raise UsageError("decryption has no network design; omit --design")
        if args.mode == "standard":
            raise UsageError("network designs compute in bitsliced mode; omit --mode standard")
        design, n = _design_args(args)
        blocks = read_blocks(data)
        out = write_blocks(serpent_encrypt_net(key, blocks, design, n, args.ks_design,
                                               args.lanes, args.capacity))
    _write_output(args.output, out)
    return 0


def cmd_decrypt(args):
    return cmd_encrypt(args, decrypt=True)


def cmd_keyschedule(args):
    key = parse_key(args.key, args.key_bits)
    report = None
    if args.design is None:
        groups = serpent.key_schedule(key)
    else:
        design = args.design.upper()
        if design not in KS_DESIGNS:
            raise UsageError(f"unknown key-schedule design {args.design!r}")
        groups, report = run_with_metrics(keyschedule_design(key, design, args.capacity))
    text = "".join(f"k{j:02d} " + " ".join(f"{w:08x}" for w in grp) + "\n"
                   for j, grp in enumerate(groups))
    if report is not None and args.metrics_format:
        text += "\n" + (report.to_json() + "\n" if args.metrics_format == "json"
                        else report.to_text())
    _text_out(args.output, text)
    return 0


def _bench_designs(args):
    names = []
    if args.design:
        for part in args.design.split(","):
            d, n = parse_design(part)
            if args.n is not None and d == "ENC3" and n is None:
                n = args.n
            if d not in ENC_DESIGNS:
                raise UsageError(f"unknown encryption design {part!r}")
            if d == "ENC3" and (n is None or not 1 <= n <= 31):
                raise UsageError("ENC3 needs a stage count between 1 and 31")
            names.append((d, n if d == "ENC3" else None))
    elif not args.sweep:
        names = [parse_design(d) for d in DEFAULT_BENCH]
    for n in range(1, (args.sweep or 0) + 1):
        if ("ENC3", n) not in names:
            names.append(("ENC3", n))
    return names


def cmd_bench(args):
    key = parse_key(args.key or "0" * 64, args.key_bits)
    designs = _bench_designs(args)
    rng = random.Random(args.seed)
    blocks = [tuple(rng.getrandbits(32) for _ in range(4)) for _ in range(args.blocks)]
    if args.ks_design not in KS_DESIGNS:
        raise UsageError(f"unknown key-schedule design {args.ks_design!r}")
    rows = compare_designs(key, blocks, designs, CostModel(), args.ks_design,
                           args.capacity, args.lanes)
    _text_out(args.output, format_table(rows, args.metrics_format or "text"))
    return 0


def load_kats(text=None):
    """Parse a KAT file into ``(id, key_bits, key, plaintext, ciphertext)`` tuples."""
    if text is None:
        text = resources.files("serpent_csp").joinpath("data/kat.txt").read_text()
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        k, p, c = line.split()
        out.append((f"kat{len(out) + 1}", len(k) * 4, int(k, 16), int(p, 16), int(c, 16)))
    return out


def run_verify(quick=False, design_blocks=8):
    """Returns ``(passed_ids, failed_ids)``."""
    passed, failed = [], []
    for vid, bits, k, p, c in load_kats():
        key = serpent.pad_key(k, bits)
        ks = serpent.key_schedule(key)
        ok = (serpent.encrypt_standard(key, p) == c
              and serpent.decrypt_standard(key, c) == p
              and serpent.block_to_int(serpent.encrypt_block(ks, serpent.int_to_block(p))) == c
              and serpent.block_to_int(serpent.decrypt_block(ks, serpent.int_to_block(c))) == p)
        (passed if ok else failed).append(vid)
    if quick:
        return passed, failed
    rng = random.Random(2024)
    key = serpent.pad_key(rng.getrandbits(256), 256)
    blocks = [tuple(rng.getrandbits(32) for _ in range(4)) for _ in range(design_blocks)]
    expected = serpent.encrypt_blocks(key, blocks)
    for ks_design in KS_DESIGNS:
        for design, n in (("ENC1", None), ("ENC2", None), ("ENC3", 1), ("ENC3", 2)):
            label = f"{ks_design}/{design}" + (f"({n})" if n else "")
            try:
                got = serpent_encrypt_net(key, blocks, design, n, ks_design)
            except Exception:  # noqa: BLE001 - any failure is a failed check
                got = None
            (passed if got == expected else failed).append(label)
    return passed, failed


def cmd_verify(args):
    passed, failed = run_verify(args.quick)
    lines = [f"ok {v}" for v in passed]
    lines.append(f"{len(passed)} passed, {len(failed)} failed")
    _text_out(args.output, "\n".join(lines) + "\n")
    if failed:
        print("verify failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_list_designs(args):
    _text_out(args.output, "".join(f"{k}\t{v}\n" for k, v in DESIGNS.items()))
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="serpent-csp", description="Serpent reference cipher and CSP network designs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, key_required=True):
        sp.add_argument("--key", required=key_required, help="key as hex, most significant nibble first")
        sp.add_argument("--key-bits", type=int, choices=(128, 192, 256))
        sp.add_argument("--out", dest="output", help="output path (default stdout)")

    def network(sp):
        sp.add_argument("--ks-design", default="KS1", type=str.upper, help="key-schedule network for --design")
        sp.add_argument("--lanes", type=int, default=1, help="parallel copies of the encryption design")
        sp.add_argument("--capacity", type=int, choices=(0, 1), default=None,
                        help="channel capacity (0 = rendezvous, 1 = one-slot buffer)")

    for name, fn in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        sp = sub.add_parser(name, help=f"{name} a file of 16-byte blocks")
        common(sp)
        sp.add_argument("--in", dest="input", help="input path (default stdin)")
        sp.add_argument("--mode", choices=("bitsliced", "standard"), default="bitsliced")
        sp.add_argument("--design", help="run through a network design instead of the reference")
        sp.add_argument("--n", type=int, help="pipelined stage count for ENC3")
        network(sp)
        sp.set_defaults(func=fn, capacity_default=0)

    sp = sub.add_parser("keyschedule", help="print the 33 subkey groups")
    common(sp)
    sp.add_argument("--design", help="KS1 or KS2 network (default: reference)")
    sp.add_argument("--capacity", type=int, choices=(0, 1), default=None)
    sp.add_argument("--metrics-format", choices=("text", "json"))
    sp.set_defaults(func=cmd_keyschedule, capacity_default=0)

    sp = sub.add_parser("bench", help="compare simulated metrics of encryption designs")
    common(sp, key_required=False)
    sp.add_argument("--design", help="comma-separated ids, e.g. ENC1,ENC3(2),ENC2")
    sp.add_argument("--n", type=int, help="stage count for a bare ENC3 in --design")
    sp.add_argument("--sweep", type=int, metavar="N", help="add ENC3(1..N)")
    sp.add_argument("--blocks", type=int, default=32)
    sp.add_argument("--seed", type=int, default=0, help="seed for the random blocks")
    sp.add_argument("--metrics-format", choices=("text", "json"), default="text")
    network(sp)
    sp.set_defaults(func=cmd_bench, capacity_default=1)

    sp = sub.add_parser("verify", help="known-answer tests and cross-design checks")
    sp.add_argument("--quick", action="store_true", help="known-answer tests only")
    sp.add_argument("--out", dest="output")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("list-designs", help="list network design ids")
    sp.add_argument("--out", dest="output")
    sp.set_defaults(func=cmd_list_designs)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "capacity", "unset") is None:
            args.capacity = args.capacity_default
        if getattr(args, "lanes", 1) < 1:
            raise UsageError("--lanes must be at least 1")
        if getattr(args, "blocks", 0) < 0:
            raise UsageError("--blocks must be non-negative")
        return args.func(args)
    except (UsageError, ValueError) as exc:
        # ShapeError is a ValueError: bad design parameters
        print(f"serpent-csp: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NetworkError) as exc:
        print(f"serpent-csp: error: {exc}", file=sys.stderr)
        return 1
