"""Serpent as CSP-style process networks, with a sequential reference cipher.

Layers, bottom up:

* :mod:`.kernel`: channels, instructions and the two execution engines.
* :mod:`.ports` / :mod:`.process`: data refinements (items, streams,
  vectors, bundles), feed composition and utility processes.
* :mod:`.skeletons`: map, zipWith, mapWith and foldl as process networks.
* :mod:`.serpent`: the bit-exact reference cipher.
* :mod:`.networks`: key-schedule and encryption designs built from the above.
* :mod:`.metrics`: logical-time metrics and design comparison.
"""

from .kernel import (ChannelError, CostModel, DeadlockError, NetworkError,
                     ProtocolError)
from .ports import ITEM, Bundle, Item, ShapeError, Stream, Vector
from .process import (Network, Proc, broadcast, chain, feed, identity, lift,
                      lift2, par, produce, produce_item, produce_stream,
                      produce_vector, relay, run, segs, sink, store,
                      store_item, store_stream, store_vector)
from .skeletons import sbind, smap, svfoldl, szipwith, vmap, vmapwith, vvfoldl, vzipwith
from .serpent import (decrypt_block, decrypt_blocks, encrypt_block,
                      encrypt_blocks, key_schedule, pad_key)
from .networks import (NetworkDesign, encryption_design, keyschedule_design,
                       serpent_encrypt_multiway, serpent_encrypt_net)
from .metrics import MetricsReport, compare_designs, run_with_metrics

__all__ = [
    "ChannelError", "CostModel", "DeadlockError", "NetworkError", "ProtocolError",
    "ITEM", "Bundle", "Item", "ShapeError", "Stream", "Vector",
    "Network", "Proc", "broadcast", "chain", "feed", "identity", "lift", "lift2", "par",
    "produce", "produce_item", "produce_stream", "produce_vector", "relay", "run", "segs",
    "sink", "store", "store_item", "store_stream", "store_vector",
    "sbind", "smap", "svfoldl", "szipwith", "vmap", "vmapwith", "vvfoldl", "vzipwith",
    "decrypt_block", "decrypt_blocks", "encrypt_block", "encrypt_blocks", "key_schedule",
    "pad_key",
    "NetworkDesign", "encryption_design", "keyschedule_design", "serpent_encrypt_multiway",
    "serpent_encrypt_net",
    "MetricsReport", "compare_designs", "run_with_metrics",
]

__version__ = "0.1.0"
