"""
Real-socket transport over UDP.

Each datagram carries exactly one framed packet. There is no retransmission: a
datagram that is dropped, or fails its checksum, is simply lost.

Classes:
    UdpReceiver: Background thread collecting datagrams into a queue.

Functions:
    udp_send: Frame and send packets, optionally dropping some on purpose.
    udp_recv: Receive datagrams on an address until a timeout.
"""

from __future__ import annotations

import queue
import socket
import sys
import threading

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import FragmentationError, TransportError
from semequal.logger import logger
from semequal.packet import Packet, frame

Address = typing.Tuple[str, int]

MAX_DATAGRAM: typing.Final[int] = 65535


class UdpReceiver:
    """
    Receive datagrams on a background thread.

    The socket is bound in `start`, so senders can be pointed at `address` right
    after. Datagrams are passed to the caller through a queue, the only state shared
    between the two threads.

    Attributes:
        address (Address): Bound address; port 0 is replaced by the real port.
        idle_timeout (float): Seconds of silence after which the thread stops.
    """

    def __init__(self, address: Address = ("127.0.0.1", 0), idle_timeout: float = 1.0) -> None:
        """Initialize the receiver without binding yet."""
        self.address = address
        self.idle_timeout = idle_timeout
        self.datagrams: queue.Queue[bytes] = queue.Queue()
        self._socket: typing.Union[socket.socket, None] = None
        self._thread: typing.Union[threading.Thread, None] = None
        self._stopped = threading.Event()

    def start(self) -> UdpReceiver:
        """
        Bind the socket and start the receive thread.

        Raises:
            TransportError: If the socket cannot be bound.
        """
        try:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            sock.bind(self.address)
        except OSError as error:
            raise TransportError(f"Cannot bind UDP socket on {self.address}: {error}") from error
        sock.settimeout(self.idle_timeout)
        self._socket = sock
        self.address = sock.getsockname()
        self._thread = threading.Thread(target=self._receive_loop, daemon=True)
        self._thread.start()
        return self

    def _receive_loop(self) -> None:
        sock = self._socket
        if sock is None:
            return
        while not self._stopped.is_set():
            try:
                datagram, _ = sock.recvfrom(MAX_DATAGRAM)
            except socket.timeout:
                break
            except OSError:
                break
            self.datagrams.put(datagram)
        self._stopped.set()

    def collect(
        self,
        expected: typing.Union[int, None] = None,
        timeout: float = 2.0,
    ) -> typing.List[bytes]:
        """
        Wait for datagrams and stop the receiver.

        Args:
            expected (int | None): Stop early once this many datagrams arrived.
            timeout (float): Longest wait for any single datagram.

        Returns:
            list[bytes]: The datagrams in arrival order.
        """
        received: typing.List[bytes] = []
        while expected is None or len(received) < expected:
            try:
                received.append(self.datagrams.get(timeout=timeout))
            except queue.Empty:
                break
        self.stop()
        while not self.datagrams.empty():
            received.append(self.datagrams.get_nowait())
        return received

    def stop(self) -> None:
        """Stop the thread and close the socket."""
        self._stopped.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        if self._socket is not None:
            self._socket.close()
            self._socket = None

    def __enter__(self) -> UdpReceiver:
        """Start receiving."""
        return self.start()

    def __exit__(self, *exc_info: object) -> None:
        """Stop receiving."""
        self.stop()


def udp_send(
    packets: typing.Sequence[Packet],
    address: Address,
    drop: typing.Collection[int] = (),
    mtu: int = 1400,
) -> typing.List[int]:
    """
    Frame and send packets as individual datagrams.

    Args:
        packets (Sequence[Packet]): Packets in sending order.
        address (Address): Destination.
        drop (Collection[int]): Packet indices to drop on the sender side.
        mtu (int): Largest payload, in bytes, a packet may carry.

    Returns:
        list[int]: Indices of the packets actually sent.

    Raises:
        FragmentationError: If a packet payload exceeds the MTU.
        TransportError: If the socket fails.
    """
    for packet in packets:
        if packet.payload.size > mtu:
            raise FragmentationError(
                f"Packet {packet.index} carries {packet.payload.size} payload bytes,"
                + f" above the MTU of {mtu}.",
            )

    sent = []
    try:
        with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
            for packet in packets:
                if packet.index in drop:
                    logger.debug("Dropping packet %d before sending", packet.index)
                    continue
                sock.sendto(frame(packet), address)
                sent.append(packet.index)
    except OSError as error:
        raise TransportError(f"Cannot send to {address}: {error}") from error
    return sent


def udp_recv(
    address: Address,
    timeout: float = 1.0,
    expected: typing.Union[int, None] = None,
) -> typing.List[bytes]:
    """
    Receive datagrams on `address` until `timeout` seconds pass without one.

    Args:
        address (Address): Address to bind.
        timeout (float): Idle timeout ending reception.
        expected (int | None): Stop early once this many datagrams arrived.

    Returns:
        list[bytes]: The raw datagrams.
    """
    receiver = UdpReceiver(address, idle_timeout=timeout).start()
    return receiver.collect(expected, timeout)
