"""Sequential Serpent reference: key schedule, S-boxes, linear transform, cipher.

Blocks are 4-tuples of 32-bit words ``(x0, x1, x2, x3)``; as a 128-bit
integer, ``x0`` holds bits 0..31. A key is given as an integer of 128, 192 or
256 bits and its words are taken least significant first.

Two computation paths are provided:

* bitsliced (the default): the S-boxes act on four words at once, bit
  position ``j`` of ``x0..x3`` forming one nibble with ``x0`` as its low bit.
* standard: the 128-bit block goes through the initial permutation, rounds
  that apply the S-box table to each of the 32 nibbles, and the final
  permutation. Both paths agree on every input.

The word helpers only use ``& | ^ << >>`` so they also accept numpy
``uint32`` arrays, which lets :func:`encrypt_columns` push many blocks
through the same code at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

MASK32 = 0xFFFFFFFF
PHI = 0x9E3779B9
ROUNDS = 32

SBOXES = [
    [3, 8, 15, 1, 10, 6, 5, 11, 14, 13, 4, 2, 7, 0, 9, 12],
    [15, 12, 2, 7, 9, 0, 5, 10, 1, 11, 14, 8, 6, 13, 3, 4],
    [8, 6, 7, 9, 3, 12, 10, 15, 13, 1, 14, 4, 0, 11, 5, 2],
    [0, 15, 11, 8, 12, 9, 6, 3, 13, 1, 2, 4, 10, 7, 5, 14],
    [1, 15, 8, 3, 12, 0, 11, 6, 2, 5, 4, 10, 9, 14, 7, 13],
    [15, 5, 2, 11, 4, 10, 9, 12, 0, 3, 14, 8, 13, 6, 7, 1],
    [7, 2, 12, 5, 8, 4, 6, 11, 14, 9, 1, 15, 13, 3, 10, 0],
    [1, 13, 15, 0, 14, 8, 2, 11, 7, 4, 12, 10, 9, 3, 5, 6],
]

# S-box used for subkey group j: the cycle s3, s2, s1, s0, s7, s6, s5, s4
KEY_SBOX_ORDER = [3, 2, 1, 0, 7, 6, 5, 4]


def key_sbox_index(group):
    return (3 - group) % 8


def invert_table(table):
    inv = [0] * 16
    for x, y in enumerate(table):
        inv[y] = x
    return inv


def inverse_sboxes():
    return [invert_table(t) for t in SBOXES]


# -- word operations -----------------------------------------------------------

def rotl(x, n):
    n %= 32
    if n == 0:
        return x
    return ((x << n) | (x >> (32 - n))) & MASK32


def rotr(x, n):
    return rotl(x, 32 - n % 32)


def shl(x, n):
    """Logical left shift toward the most significant bit, zero filled."""
    return (x << n) & MASK32


# -- bitsliced S-boxes -----------------------------------------------------------

@lru_cache(maxsize=64)
def _anf(table):
    """Algebraic normal form of each output bit of a 4-bit table.

    Returns four lists of monomials; monomial ``m`` is the AND of the input
    words whose bit is set in ``m`` (``m == 0`` is the constant 1).
    """
    outs = []
    for bit in range(4):
        coef = [(table[x] >> bit) & 1 for x in range(16)]
        for i in range(4):
            step = 1 << i
            for x in range(16):
                if x & step:
                    coef[x] ^= coef[x ^ step]
        outs.append(tuple(m for m in range(16) if coef[m]))
    return tuple(outs)


def apply_bitsliced(table, block):
    """Apply a 4-bit table to all 32 bit positions of a block in parallel."""
    x0, x1, x2, x3 = block
    prods = [MASK32, x0, x1, x0 & x1, x2, x0 & x2, x1 & x2, 0, x3, 0, 0, 0, 0, 0, 0, 0]
    prods[7] = prods[3] & x2
    for m in range(9, 16):
        low = m & -m
        prods[m] = prods[m ^ low] & (x0, x1, x2, x3)[low.bit_length() - 1]
    out = []
    for monos in _anf(tuple(table)):
        acc = 0
        for m in monos:
            acc ^= prods[m]
        out.append(acc)
    return tuple(out)


def sbox(i, block):
    return apply_bitsliced(SBOXES[i], block)


def inv_sbox(i, block):
    return apply_bitsliced(invert_table(SBOXES[i]), block)


# -- linear transformation ---------------------------------------------------------

def linear_transform(block):
    x0, x1, x2, x3 = block
    x0 = rotl(x0, 13)
    x2 = rotl(x2, 3)
    x1 = x1 ^ x0 ^ x2
    x3 = x3 ^ x2 ^ shl(x0, 3)
    x1 = rotl(x1, 1)
    x3 = rotl(x3, 7)
    x0 = x0 ^ x1 ^ x3
    x2 = x2 ^ x3 ^ shl(x1, 7)
    x0 = rotl(x0, 5)
    x2 = rotl(x2, 22)
    return (x0, x1, x2, x3)


def inverse_linear_transform(block):
    x0, x1, x2, x3 = block
    x2 = rotr(x2, 22)
    x0 = rotr(x0, 5)
    x2 = x2 ^ x3 ^ shl(x1, 7)
    x0 = x0 ^ x1 ^ x3
    x3 = rotr(x3, 7)
    x1 = rotr(x1, 1)
    x3 = x3 ^ x2 ^ shl(x0, 3)
    x1 = x1 ^ x0 ^ x2
    x2 = rotr(x2, 3)
    x0 = rotr(x0, 13)
    return (x0, x1, x2, x3)


def xor_block(a, b):
    return (a[0] ^ b[0], a[1] ^ b[1], a[2] ^ b[2], a[3] ^ b[3])


# -- key schedule -----------------------------------------------------------------

@dataclass(frozen=True)
class Key256:
    """A key padded to eight 32-bit words (least significant word first)."""

    words: tuple
    bit_length: int

    @property
    def value(self):
        return sum(w << (32 * i) for i, w in enumerate(self.words))


def pad_key(raw, bit_length=256):
    """Pad a 128/192/256-bit key: append a single 1 bit, then zeros, to 256 bits."""
    if bit_length not in (128, 192, 256):
        raise ValueError(f"unsupported key length {bit_length}")
    if raw < 0 or raw >> bit_length:
        raise ValueError(f"key does not fit in {bit_length} bits")
    if bit_length < 256:
        raw |= 1 << bit_length
    return Key256(tuple((raw >> (32 * i)) & MASK32 for i in range(8)), bit_length)


def _as_key(key):
    if isinstance(key, Key256):
        return key
    return pad_key(key, 256)


def generate_prekeys(key):
    """132 prekeys ``w_0..w_131``; the key words play the role of ``w_-8..w_-1``."""
    w = list(_as_key(key).words)
    for i in range(132):
        w.append(rotl(w[i] ^ w[i + 3] ^ w[i + 5] ^ w[i + 7] ^ PHI ^ i, 11))
    return w[8:]


def key_schedule(key):
    """33 subkey groups of 4 words each."""
    w = generate_prekeys(key)
    return [sbox(key_sbox_index(j), tuple(w[4 * j:4 * j + 4])) for j in range(33)]


# -- bitsliced cipher ---------------------------------------------------------------

def serpent_fold(block, round_index, subkeys):
    """One full round: key mixing, S-box ``round_index mod 8``, linear transform."""
    return linear_transform(sbox(round_index % 8, xor_block(block, subkeys)))


def encrypt_block(ks, block):
    b = tuple(block)
    for i in range(31):
        b = serpent_fold(b, i, ks[i])
    return xor_block(sbox(7, xor_block(b, ks[31])), ks[32])


def decrypt_block(ks, block):
    b = inv_sbox(7, xor_block(tuple(block), ks[32]))
    b = xor_block(b, ks[31])
    for i in range(30, -1, -1):
        b = xor_block(inv_sbox(i % 8, inverse_linear_transform(b)), ks[i])
    return b


def encrypt_blocks(key, blocks):
    ks = key_schedule(key)
    return [encrypt_block(ks, b) for b in blocks]


def decrypt_blocks(key, blocks):
    ks = key_schedule(key)
    return [decrypt_block(ks, b) for b in blocks]


def encrypt_columns(ks, cols):
    """Encrypt many blocks at once; ``cols`` holds four numpy uint32 arrays."""
    return encrypt_block(ks, cols)


def decrypt_columns(ks, cols):
    return decrypt_block(ks, cols)


# -- 128-bit conversions and permutations --------------------------------------------

def block_to_int(block):
    return block[0] | (block[1] << 32) | (block[2] << 64) | (block[3] << 96)


def int_to_block(x):
    return tuple((x >> (32 * i)) & MASK32 for i in range(4))


def block_from_bytes(data):
    return int_to_block(int.from_bytes(data, "little"))


def block_to_bytes(block):
    return block_to_int(block).to_bytes(16, "little")


# output bit i of IP is input bit IP_TABLE[i]
IP_TABLE = [32 * (i % 4) + i // 4 for i in range(128)]
FP_TABLE = [4 * (i % 32) + i // 32 for i in range(128)]


def _permute(table, x):
    out = 0
    for i, src in enumerate(table):
        out |= ((x >> src) & 1) << i
    return out


def ip(x):
    return _permute(IP_TABLE, x)


def fp(x):
    return _permute(FP_TABLE, x)


# -- standard (non-bitsliced) description ---------------------------------------------

def _nibble_sbox(table, x):
    out = 0
    for j in range(32):
        out |= table[(x >> (4 * j)) & 0xF] << (4 * j)
    return out


def _lt_hat(x):
    return ip(block_to_int(linear_transform(int_to_block(fp(x)))))


def _lt_hat_inv(x):
    return ip(block_to_int(inverse_linear_transform(int_to_block(fp(x)))))


def standard_subkeys(key):
    """Round keys in the permuted domain, S-boxed nibble-wise from the table."""
    w = generate_prekeys(key)
    return [_nibble_sbox(SBOXES[key_sbox_index(j)], ip(block_to_int(w[4 * j:4 * j + 4])))
            for j in range(33)]


def encrypt_standard(key, plaintext):
    """Encrypt a 128-bit integer with the IP / table-round / FP description."""
    k = standard_subkeys(key)
    b = ip(plaintext)
    for i in range(31):
        b = _lt_hat(_nibble_sbox(SBOXES[i % 8], b ^ k[i]))
    b = _nibble_sbox(SBOXES[7], b ^ k[31]) ^ k[32]
    return fp(b)


def decrypt_standard(key, ciphertext):
    k = standard_subkeys(key)
    inv = inverse_sboxes()
    b = _nibble_sbox(inv[7], ip(ciphertext) ^ k[32]) ^ k[31]
    for i in range(30, -1, -1):
        b = _nibble_sbox(inv[i % 8], _lt_hat_inv(b)) ^ k[i]
    return fp(b)
