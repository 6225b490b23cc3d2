"""Channel kernel and execution engines.

Processes are generator functions that yield instructions (``Send``,
``Recv``, ``SendAll``, ``RecvAll``, ``Select``, ``Par``, ``Work``) to the
kernel. The kernel matches senders with receivers on each channel and keeps
a logical clock per task, so the same process code runs under two engines:

* :class:`SimEngine` steps tasks cooperatively on one thread. Logical time
  follows max-plus rules and does not depend on the interleaving, which is
  what makes cycle counts reproducible across scheduler seeds.
* :class:`ThreadEngine` runs every task on its own OS thread.

Clock rules (``c`` is ``CostModel.cycles_per_rendezvous``):

* capacity 0: a transfer completes at ``max(t_send, t_recv) + c`` for both
  sides.
* capacity 1: a deposit completes at ``max(t_send, t_slot_freed) + c``; the
  receiver takes the value at ``max(t_recv, t_deposit)`` at no extra cost.
"""

from __future__ import annotations

import random
import threading
from collections import deque
from dataclasses import dataclass


class NetworkError(Exception):
    """Base class for runtime failures of a process network."""


class DeadlockError(NetworkError):
    """No task can make progress but the network has not terminated."""

    def __init__(self, stuck, unconsumed=()):
        self.stuck = sorted(stuck)
        self.unconsumed = sorted(unconsumed)
        parts = []
        if self.stuck:
            parts.append("stuck processes: " + ", ".join(self.stuck))
        if self.unconsumed:
            parts.append("unconsumed channels: " + ", ".join(self.unconsumed))
        super().__init__("deadlock; " + "; ".join(parts))


class ProtocolError(NetworkError):
    """A stream message was sent after its end-of-transmission signal."""


class ChannelError(NetworkError):
    """Two processes tried to use the same channel end concurrently."""


@dataclass(frozen=True)
class CostModel:
    """Cycle costs charged by the logical-time scheduler (defaults: 1 and 1)."""

    cycles_per_rendezvous: int = 1
    cycles_per_primitive_op: int = 1

    def __post_init__(self):
        if self.cycles_per_rendezvous < 0 or self.cycles_per_primitive_op < 0:
            raise ValueError("costs must be non-negative")


class Channel:
    __slots__ = (
        "name", "capacity", "sender", "receiver", "full", "buf", "avail",
        "freed_at", "watchers", "count", "times", "stream", "is_eot",
    )

    def __init__(self, name, capacity=0):
        if capacity not in (0, 1):
            raise ValueError("channel capacity must be 0 or 1")
        self.name = name
        self.capacity = capacity
        self.sender = None
        self.receiver = None
        self.full = False
        self.buf = None
        self.avail = 0
        self.freed_at = 0
        self.watchers = []
        self.count = 0
        self.times = None
        # stream protocol instrumentation, set by ports.StreamPort
        self.stream = None
        self.is_eot = False

    def ready(self):
        return self.full if self.capacity else self.sender is not None

    def reset(self):
        self.sender = self.receiver = None
        self.full = False
        self.buf = None
        self.avail = self.freed_at = 0
        self.watchers = []
        self.count = 0

    def __repr__(self):
        return f"Channel({self.name!r})"


# -- instructions -----------------------------------------------------------

class Send:
    __slots__ = ("ch", "value")

    def __init__(self, ch, value):
        self.ch = ch
        self.value = value

    def apply(self, k, task):
        k._begin(task, 1, False)
        k._send(task, 0, self.ch, self.value)
        return k._issued(task)


class Recv:
    __slots__ = ("ch",)

    def __init__(self, ch):
        self.ch = ch

    def apply(self, k, task):
        k._begin(task, 1, False)
        k._recv(task, 0, self.ch)
        return k._issued(task)


class SendAll:
    """Concurrent sends on distinct channels; completes when all have."""

    __slots__ = ("chans", "values")

    def __init__(self, chans, values):
        self.chans = chans
        self.values = values

    def apply(self, k, task):
        k._begin(task, len(self.chans), True)
        for i, (ch, v) in enumerate(zip(self.chans, self.values)):
            k._send(task, i, ch, v)
        return k._issued(task)


class RecvAll:
    """Concurrent receives on distinct channels; yields the list of values."""

    __slots__ = ("chans",)

    def __init__(self, chans):
        self.chans = chans

    def apply(self, k, task):
        k._begin(task, len(self.chans), True)
        for i, ch in enumerate(self.chans):
            k._recv(task, i, ch)
        return k._issued(task)


class Select:
    """Wait until a guard is ready; yields the index of the first ready one.

    A guard is a sequence of channels and is ready when any of them has a
    pending message. Nothing is consumed; earlier guards win ties.
    """

    __slots__ = ("guards",)

    def __init__(self, guards):
        self.guards = guards

    def apply(self, k, task):
        for gi, guard in enumerate(self.guards):
            for ch in guard:
                if ch.ready():
                    task.value = gi
                    return True
        task.select = self.guards
        for guard in self.guards:
            for ch in guard:
                ch.watchers.append(task)
        k._block(task)
        return False


class Par:
    """Run children concurrently and yield the list of their return values.

    Entries are nodes (anything with ``run()`` and ``name``) or bare
    generators, which inherit the parent's node.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = entries

    def apply(self, k, task):
        n = len(self.entries)
        k._begin(task, n, True)
        for i, entry in enumerate(self.entries):
            if hasattr(entry, "run"):
                k.spawn(entry.run(), entry, task, i)
            else:
                k.spawn(entry, task.node, task, i)
        return k._issued(task)


class Work:
    """Spend ``ops`` primitive operations of local compute."""

    __slots__ = ("ops",)

    def __init__(self, ops=1):
        self.ops = ops

    def apply(self, k, task):
        cost = self.ops * k.costs.cycles_per_primitive_op
        if cost:
            start = task.clock
            task.clock = start + cost
            k.activity.append((start, task.clock, task.tid, task.stage))
        return True


# -- tasks and kernel --------------------------------------------------------

class Task:
    __slots__ = (
        "tid", "gen", "node", "name", "stage", "parent", "slot", "clock",
        "value", "results", "pending", "op_end", "issuing", "select",
        "ready", "blocked", "waiting_children", "done",
    )

    def __init__(self, tid, gen, node, parent, slot, clock):
        self.tid = tid
        self.gen = gen
        self.node = node
        self.name = getattr(node, "name", "root")
        self.stage = getattr(node, "stage", None)
        self.parent = parent
        self.slot = slot
        self.clock = clock
        self.value = None
        self.results = None
        self.pending = 0
        self.op_end = clock
        self.issuing = False
        self.select = None
        self.ready = False
        self.blocked = False
        self.waiting_children = False
        self.done = False


class Kernel:
    """Channel matching and logical-time bookkeeping shared by both engines."""

    def __init__(self, costs=None):
        self.costs = costs or CostModel()
        self.tasks = []
        self.live = 0
        self.max_clock = 0
        self.activity = []
        self.roots = []

    # engine hooks
    def _wake(self, task):
        raise NotImplementedError

    def _start(self, task):
        raise NotImplementedError

    def _block(self, task):
        pass

    def spawn(self, gen, node, parent=None, slot=0):
        clock = parent.clock if parent is not None else 0
        task = Task(len(self.tasks), gen, node, parent, slot, clock)
        if parent is not None and task.stage is None:
            task.stage = parent.stage
        self.tasks.append(task)
        self.live += 1
        if parent is None:
            self.roots.append(task)
        self._start(task)
        return task

    def _begin(self, task, n, multi):
        task.pending = n
        task.op_end = task.clock
        task.results = [None] * n if multi else None
        task.issuing = True

    def _issued(self, task):
        task.issuing = False
        if task.pending == 0:
            task.clock = task.op_end
            if task.results is not None:
                task.value = task.results
            return True
        self._block(task)
        return False

    def _complete(self, task, slot, value, t):
        if t > task.op_end:
            task.op_end = t
        if task.results is not None:
            task.results[slot] = value
        else:
            task.value = value
        task.pending -= 1
        if task.pending == 0 and not task.issuing:
            task.clock = task.op_end
            if task.results is not None:
                task.value = task.results
            self._wake(task)

    def _finish(self, task, value):
        task.done = True
        self.live -= 1
        if task.clock > self.max_clock:
            self.max_clock = task.clock
        if task.parent is not None:
            self._complete(task.parent, task.slot, value, task.clock)
        else:
            task.value = value

    def _notify(self, ch):
        for task in list(ch.watchers):
            if task.select is None:
                continue
            for gi, guard in enumerate(task.select):
                if any(c.ready() for c in guard):
                    for g in task.select:
                        for c in g:
                            if task in c.watchers:
                                c.watchers.remove(task)
                    task.select = None
                    task.value = gi
                    self._wake(task)
                    break

    def _check_protocol(self, ch):
        stream = ch.stream
        if ch.is_eot:
            stream.eot_count += 1
            stream.closed = True
        elif stream.closed and not stream.nested:
            raise ProtocolError(f"message on {ch.name} after end of transmission")

    def _send(self, task, slot, ch, value):
        if ch.stream is not None:
            self._check_protocol(ch)
        t0 = task.clock
        c = self.costs.cycles_per_rendezvous
        if ch.sender is not None:
            raise ChannelError(f"two concurrent senders on {ch.name}")
        if ch.capacity == 0:
            r = ch.receiver
            if r is None:
                ch.sender = (task, slot, t0, value)
                if ch.watchers:
                    self._notify(ch)
                return
            ch.receiver = None
            rtask, rslot, rt0 = r
            t = (t0 if t0 > rt0 else rt0) + c
            self._transfer(ch, t)
            self._complete(rtask, rslot, value, t)
            self._complete(task, slot, None, t)
            return
        if ch.full:
            ch.sender = (task, slot, t0, value)
            return
        t = (t0 if t0 > ch.freed_at else ch.freed_at) + c
        r = ch.receiver
        if r is not None:
            ch.receiver = None
            rtask, rslot, rt0 = r
            taken = t if t > rt0 else rt0
            ch.freed_at = taken
            self._transfer(ch, taken)
            self._complete(rtask, rslot, value, taken)
        else:
            ch.full = True
            ch.buf = value
            ch.avail = t
            if ch.watchers:
                self._notify(ch)
        self._complete(task, slot, None, t)

    def _recv(self, task, slot, ch):
        t0 = task.clock
        if ch.receiver is not None:
            raise ChannelError(f"two concurrent receivers on {ch.name}")
        if ch.capacity == 0:
            s = ch.sender
            if s is None:
                ch.receiver = (task, slot, t0)
                return
            ch.sender = None
            stask, sslot, st0, value = s
            t = (t0 if t0 > st0 else st0) + self.costs.cycles_per_rendezvous
            self._transfer(ch, t)
            self._complete(stask, sslot, None, t)
            self._complete(task, slot, value, t)
            return
        if not ch.full:
            ch.receiver = (task, slot, t0)
            return
        taken = t0 if t0 > ch.avail else ch.avail
        value = ch.buf
        ch.full = False
        ch.buf = None
        ch.freed_at = taken
        self._transfer(ch, taken)
        self._complete(task, slot, value, taken)
        s = ch.sender
        if s is not None:
            ch.sender = None
            stask, sslot, st0, svalue = s
            t = (st0 if st0 > taken else taken) + self.costs.cycles_per_rendezvous
            ch.full = True
            ch.buf = svalue
            ch.avail = t
            self._complete(stask, sslot, None, t)

    def _transfer(self, ch, t):
        ch.count += 1
        if ch.times is not None:
            ch.times.append(t)

    def stuck_names(self):
        return [t.name for t in self.tasks if not t.done and not t.waiting_children]

    def _step(self, task):
        gen = task.gen
        while True:
            try:
                instr = gen.send(task.value)
            except StopIteration as stop:
                self._finish(task, stop.value)
                return
            task.value = None
            task.waiting_children = type(instr) is Par
            if not instr.apply(self, task):
                return
            task.waiting_children = False


class SimEngine(Kernel):
    """Deterministic cooperative scheduler over logical time.

    ``seed`` (optional) randomizes which runnable task is stepped next; data
    outputs and logical times must not depend on it.
    """

    def __init__(self, costs=None, seed=None):
        super().__init__(costs)
        self.ready = deque()
        self.rng = random.Random(seed) if seed is not None else None

    def _start(self, task):
        self.ready.append(task)

    def _wake(self, task):
        self.ready.append(task)

    def run(self, root_gens):
        for gen, node in root_gens:
            self.spawn(gen, node)
        ready = self.ready
        rng = self.rng
        while ready:
            if rng is None:
                task = ready.popleft()
            else:
                i = rng.randrange(len(ready))
                ready[i], ready[-1] = ready[-1], ready[i]
                task = ready.pop()
            self._step(task)
        if self.live:
            raise DeadlockError(self.stuck_names())
        return [t.value for t in self.roots]


class _Abort(BaseException):
    pass


class ThreadEngine(Kernel):
    """One OS thread per task; all channel state is guarded by one lock."""

    def __init__(self, costs=None, timeout=60.0):
        super().__init__(costs)
        self.cond = threading.Condition()
        self.blocked = 0
        self.error = None
        self.threads = []
        self.timeout = timeout

    def _start(self, task):
        th = threading.Thread(target=self._main, args=(task,), daemon=True)
        self.threads.append(th)
        th.start()

    def _wake(self, task):
        task.ready = True
        if task.blocked:
            task.blocked = False
            self.blocked -= 1
        self.cond.notify_all()

    def _block(self, task):
        task.ready = False

    def _main(self, task):
        with self.cond:
            try:
                self._run_task(task)
            except _Abort:
                pass
            except BaseException as exc:  # noqa: BLE001 - surfaced by run()
                if self.error is None:
                    self.error = exc
            finally:
                if not task.done:
                    task.done = True
                    self.live -= 1
                self.cond.notify_all()

    def _run_task(self, task):
        gen = task.gen
        while True:
            if self.error is not None:
                raise _Abort
            try:
                instr = gen.send(task.value)
            except StopIteration as stop:
                self._finish(task, stop.value)
                return
            task.value = None
            task.waiting_children = type(instr) is Par
            if not instr.apply(self, task):
                self._wait(task)
            task.waiting_children = False

    def _wait(self, task):
        task.blocked = True
        self.blocked += 1
        if self.blocked == self.live and self.error is None:
            self.error = DeadlockError(self.stuck_names())
            self.cond.notify_all()
        while not task.ready:
            if self.error is not None:
                raise _Abort
            self.cond.wait()
        task.ready = False

    def run(self, root_gens):
        with self.cond:
            for gen, node in root_gens:
                self.spawn(gen, node)
        i = 0
        while i < len(self.threads):
            self.threads[i].join(self.timeout)
            if self.threads[i].is_alive():
                with self.cond:
                    if self.error is None:
                        self.error = NetworkError("thread engine timed out")
                    self.cond.notify_all()
                self.threads[i].join()
            i += 1
        if self.error is not None:
            raise self.error
        return [t.value for t in self.roots]
