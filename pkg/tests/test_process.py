import pytest

from serpent_csp.kernel import DeadlockError, ProtocolError, Recv, Send
from serpent_csp.ports import (ITEM, Bundle, BundlePort, ShapeError, Stream, Vector,
                               standalone_port, transpose)
from serpent_csp.process import (Network, broadcast, chain, feed, identity,
                                 leaf, lift, par, produce, produce_item,
                                 produce_stream, produce_vector, relay, run,
                                 segs, sink, store, store_item, store_stream,
                                 store_vector, wired)

ENGINES = ["sim", "threads"]


def test_shape_strings():
    assert str(Vector(4, ITEM)) == "Vector[4, Item]"
    assert str(Stream(Vector(2, ITEM))) == "Stream[Vector[2, Item]]"
    assert str(Bundle(ITEM, Stream(ITEM))) == "Bundle(Item, Stream[Item])"


def test_vector_length_must_be_positive():
    with pytest.raises(ShapeError):
        Vector(0, ITEM)


@pytest.mark.parametrize("engine", ENGINES)
def test_produce_store_item(engine):
    assert run(feed(produce_item(5), store_item()), engine=engine) == {"out": 5}


def test_single_rendezvous_costs_one_cycle():
    res = Network(feed(produce_item(1), store_item())).run()
    assert res.total_cycles == 1
    assert res.instance.process_count == 2
    assert res.instance.channel_count == 1


@pytest.mark.parametrize("engine", ENGINES)
@pytest.mark.parametrize("values", [[], [1], [1, 2, 3]])
def test_stream_round_trip(engine, values):
    assert run(feed(produce_stream(values), store_stream()), engine=engine)["out"] == values


@pytest.mark.parametrize("cap", [0, 1])
def test_relay_chain(cap):
    p = chain(produce_stream([1, 2, 3]), relay(Stream(ITEM)), relay(Stream(ITEM)), store_stream())
    assert run(p, capacity=cap)["out"] == [1, 2, 3]


def test_vector_round_trip_uses_one_producer_per_element():
    res = Network(feed(produce_vector([1, 2, 3, 4]), store_vector(4))).run()
    assert res.outputs["out"] == [1, 2, 3, 4]
    assert res.instance.process_count == 5


def test_nested_shapes():
    shape = Stream(Vector(2, Stream(ITEM)))
    value = [[[1, 2], []], [[3], [4, 5, 6]]]
    res = Network(feed(produce(shape, value), store(shape))).run()
    assert res.outputs["out"] == value
    # outer stream terminated once; inner streams once per outer element
    assert sorted(res.eot_counts.values())[-1] == 2


def test_feed_shape_mismatch_names_both_sides():
    with pytest.raises(ShapeError, match="Vector\\[2, Item\\].*Item"):
        feed(produce_vector([1, 2]), store_item())


def test_network_must_be_closed():
    with pytest.raises(ShapeError):
        Network(identity())


def test_build_checks_port_shapes():
    p = identity(ITEM)
    with pytest.raises(ShapeError):
        p.build(None, standalone_port(Stream(ITEM)), standalone_port(ITEM))


def test_par_bundles_ports():
    double = lift(lambda x: 2 * x, name="double")
    p = chain(produce(Bundle(ITEM, ITEM), (3, 4)), par(double, identity()), store(Bundle(ITEM, ITEM)))
    assert run(p)["out"] == (6, 4)


def test_broadcast_copies_stream():
    p = chain(produce_stream(range(8)), broadcast(Stream(ITEM), 3), store(Vector(3, Stream(ITEM))))
    assert run(p)["out"] == [list(range(8))] * 3


def test_broadcast_item():
    p = chain(produce_item(7), broadcast(ITEM, 2), store_vector(2))
    assert run(p)["out"] == [7, 7]


def test_segs_least_significant_first():
    value = sum(i << (32 * i) for i in range(8))
    p = chain(produce_item(value), segs(32, 256), store_vector(8))
    assert run(p)["out"] == list(range(8))


def test_segs_rejects_uneven_width():
    with pytest.raises(ShapeError):
        segs(30, 256)


def test_produce_rejects_wrong_length():
    with pytest.raises(ShapeError):
        produce(Vector(3, ITEM), [1, 2])


def test_duplicate_output_keys():
    p = par(feed(produce_item(1), store_item("x")), feed(produce_item(2), store_item("x")))
    with pytest.raises(ShapeError):
        Network(p).build()


def _leaky():
    # a producer whose output nobody reads
    return wired("leaky", None, None,
                 lambda g, i, o: [produce_item(1).build(g, None, g.port(ITEM, "dangling"))])


def test_unconsumed_item_is_a_deadlock():
    with pytest.raises(DeadlockError, match="prd"):
        run(_leaky())


def test_buffered_leftover_is_reported():
    with pytest.raises(DeadlockError, match="unconsumed channels: dangling"):
        run(_leaky(), capacity=1)


def test_double_eot_is_a_protocol_error():
    def twice(inp, out, node):
        yield Send(out.eot, True)
        yield Send(out.eot, True)

    def drain(inp, out, node):
        yield Recv(inp.eot)
        yield Recv(inp.eot)

    p = feed(leaf("twice", None, Stream(ITEM), twice), leaf("drain", Stream(ITEM), None, drain))
    with pytest.raises(ProtocolError):
        run(p)


def test_sink_discards_stream():
    assert run(feed(produce_stream([1, 2]), sink(Stream(ITEM)))) == {}


def test_transpose_requires_equal_lengths():
    a = standalone_port(Vector(2, ITEM))
    b = standalone_port(Vector(3, ITEM))
    with pytest.raises(ShapeError):
        transpose(BundlePort([a, b]))
    t = transpose(BundlePort([a, standalone_port(Vector(2, ITEM))]))
    assert t.shape == Vector(2, Bundle(ITEM, ITEM))
