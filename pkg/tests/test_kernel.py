import pytest

from serpent_csp.kernel import (Channel, ChannelError, CostModel, DeadlockError,
                                Par, ProtocolError, Recv, Select, Send, SendAll,
                                SimEngine, ThreadEngine, Work)
from serpent_csp.ports import ITEM, Stream, recv_stream, send, standalone_port


def run_gens(*gens, engine="sim", costs=None):
    k = SimEngine(costs) if engine == "sim" else ThreadEngine(costs, timeout=10)
    return k, k.run([(g, None) for g in gens])


def sender(ch, values, log=None):
    for v in values:
        yield Send(ch, v)
        if log is not None:
            log.append(("sent", v))


def receiver(ch, n):
    out = []
    for _ in range(n):
        out.append((yield Recv(ch)))
    return out


@pytest.mark.parametrize("engine", ["sim", "threads"])
@pytest.mark.parametrize("cap", [0, 1])
def test_values_arrive_in_order(engine, cap):
    ch = Channel("c", cap)
    _, res = run_gens(sender(ch, range(20)), receiver(ch, 20), engine=engine)
    assert res[1] == list(range(20))


def test_rendezvous_time_is_max_plus_cost():
    ch = Channel("c")

    def slow_sender():
        yield Work(5)
        yield Send(ch, 1)

    k, _ = run_gens(slow_sender(), receiver(ch, 1), costs=CostModel(2, 1))
    assert k.max_clock == 7


def test_buffered_channel_lets_sender_run_ahead():
    ch = Channel("c", 1)
    ch.times = []

    def slow_receiver():
        yield Work(10)
        return (yield Recv(ch))

    k, res = run_gens(sender(ch, [1]), slow_receiver())
    assert res[1] == 1
    # deposit completes at 1, receiver takes it when it is ready at 10
    assert ch.times == [10]
    assert k.tasks[0].clock == 1


def test_zero_cost_model():
    ch = Channel("c")
    k, _ = run_gens(sender(ch, [1, 2]), receiver(ch, 2), costs=CostModel(0, 0))
    assert k.max_clock == 0


def test_cost_model_rejects_negative():
    with pytest.raises(ValueError):
        CostModel(-1, 0)


@pytest.mark.parametrize("engine", ["sim", "threads"])
def test_deadlock_is_reported(engine):
    a, b = Channel("a"), Channel("b")

    def p():
        yield Recv(a)
        yield Send(b, 1)

    def q():
        yield Recv(b)
        yield Send(a, 1)

    with pytest.raises(DeadlockError):
        run_gens(p(), q(), engine=engine)


def test_deadlock_names_stuck_processes():
    ch = Channel("lonely")

    class N:
        name = "waiter"
        stage = None

    k = SimEngine()
    with pytest.raises(DeadlockError) as info:
        k.run([(receiver(ch, 1), N())])
    assert info.value.stuck == ["waiter"]
    assert "waiter" in str(info.value)


def test_two_senders_rejected():
    ch = Channel("c")
    with pytest.raises(ChannelError):
        run_gens(sender(ch, [1]), sender(ch, [2]), receiver(ch, 2))


def test_send_all_and_par():
    chans = [Channel(f"c{i}") for i in range(3)]

    def fan_out():
        yield SendAll(chans, [1, 2, 3])

    def fan_in():
        return (yield Par([receiver(c, 1) for c in chans]))

    _, res = run_gens(fan_out(), fan_in())
    assert res[1] == [[1], [2], [3]]


def test_select_prefers_first_ready_guard():
    a, b = Channel("a", 1), Channel("b", 1)

    def both():
        yield SendAll([a, b], [1, 2])

    def chooser():
        yield Work(3)
        g = yield Select(((a,), (b,)))
        v = yield Recv((a, b)[g])
        w = yield Recv((a, b)[1 - g])
        return g, v, w

    _, res = run_gens(both(), chooser())
    assert res[1] == (0, 1, 2)


def test_protocol_violation_after_eot():
    port = standalone_port(Stream(ITEM), "s")

    def bad():
        yield from send(port, [1])
        yield Send(port.elements.channel, 2)

    def good_reader():
        yield from recv_stream(port)
        yield Recv(port.elements.channel)

    with pytest.raises(ProtocolError):
        run_gens(bad(), good_reader())


def test_activity_records_work_intervals():
    def worker():
        yield Work(3)
        yield Work(2)

    k, _ = run_gens(worker())
    assert [(a[0], a[1]) for a in k.activity] == [(0, 3), (3, 5)]
