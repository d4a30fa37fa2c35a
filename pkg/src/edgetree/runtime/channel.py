"""Store-and-forward channel used for logger shipping and shadow replication.

The sender keeps every item until the final receiver acknowledges it
(end-to-end, cumulative acks).  Lost hops are recovered by go-back-N
retransmission after a timeout; the receiver accepts only the next
expected sequence number, so per-channel order is preserved and nothing
is delivered twice to the same receiver.  The receiver may change while
items are in flight (a device re-attaching to another fog); a new
receiver starts at the sender's lowest unacknowledged item.
"""
from __future__ import annotations

from typing import Callable


class ReliableChannel:
    def __init__(self, sim, name: str, sender: str,
                 target_fn: Callable[[], str | None],
                 deliver_fn: Callable[[str, int, object], None],
                 kind: str = "log"):
        self.sim = sim
        self.name = name
        self.sender = sender
        self.target_fn = target_fn
        self.deliver_fn = deliver_fn
        self.kind = kind
        self.items: list = []
        self.acked = 0
        self.next_send = 0
        self.expected: dict[str, int] = {}
        self.closed = False
        self._timer = None

    @property
    def pending(self) -> int:
        return len(self.items) - self.acked

    def push(self, item) -> int:
        seq = len(self.items)
        self.items.append(item)
        self.pump()
        return seq

    def pump(self):
        sim, topo = self.sim, self.sim.topology
        if self.closed or self.acked >= len(self.items):
            return
        if topo.is_down(self.sender, sim.now):
            return
        target = self.target_fn()
        if target is None:
            return
        if target == self.sender:
            for seq in range(self.acked, len(self.items)):
                self._receive(target, seq, self.acked)
            self.acked = self.next_send = len(self.items)
            return
        if not topo.is_reachable(self.sender, target, sim.now):
            # resumed by kick() on heal or re-attachment
            return
        path = topo.path(self.sender, target)
        base = self.acked
        for seq in range(max(self.next_send, self.acked), len(self.items)):
            self._hop(path, 1, seq, base)
        self.next_send = len(self.items)
        self._arm(path)

    def _hop(self, path, i, seq, base):
        delay = self.sim.hop_delay(path[i - 1], path[i])
        self.sim.after(delay, f"{self.kind}_hop", path[i], f"{self.name}#{seq}",
                       lambda: self._arrive(path, i, seq, base))

    def _arrive(self, path, i, seq, base):
        if self.closed:
            return
        if i < len(path) - 1:
            self._hop(path, i + 1, seq, base)
            return
        upto = self._receive(path[-1], seq, base)
        back = self.sim.path_delay(path[::-1])
        self.sim.after(back, f"{self.kind}_ack", self.sender, f"{self.name}<{upto}",
                       lambda: self._on_ack(upto))

    def _receive(self, receiver, seq, base) -> int:
        exp = max(self.expected.get(receiver, 0), base)
        if seq == exp:
            self.deliver_fn(receiver, seq, self.items[seq])
            exp += 1
        self.expected[receiver] = exp
        return exp

    def _on_ack(self, upto: int):
        if upto > self.acked:
            self.acked = min(upto, len(self.items))
            self.next_send = max(self.next_send, self.acked)
        if self.acked >= len(self.items) and self._timer is not None:
            self._timer.cancelled = True
            self._timer = None

    def _arm(self, path):
        if self._timer is not None and not self._timer.cancelled:
            return
        rto = 2.0 * self.sim.mean_path_ms(path, 4.0) + 10.0
        self._timer = self.sim.after(rto, f"{self.kind}_rto", self.sender, self.name, self._on_timeout)

    def _on_timeout(self):
        self._timer = None
        if self.acked < len(self.items):
            self.next_send = self.acked
            self.pump()

    def kick(self):
        """Restart transmission from the first unacknowledged item."""
        if self._timer is not None:
            self._timer.cancelled = True
            self._timer = None
        self.next_send = self.acked
        self.pump()

    def close(self):
        self.closed = True
        if self._timer is not None:
            self._timer.cancelled = True
            self._timer = None
