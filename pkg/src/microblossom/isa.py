"""Accelerator instruction set, responses and the 32-bit instruction word codec.

Word layouts (bit ranges inclusive)::

    reset          [31:6] 0          [5:2] 1001  [1:0] 00
    setDirection   [31:17] S  [16:15] dir  [14:2] 0  [1:0] 00
    grow           [31:6] l          [5:2] 1101  [1:0] 00
    setCover       [31:17] C  [16:2] S            [1:0] 01
    findConflict   [31:6] 0          [5:2] 0001  [1:0] 00
    loadDefects    [31:6] layer      [5:2] 0111  [1:0] 00

Directions are two's complement in two bits (``10`` is invalid). Defect bits of
``loadDefects`` travel beside the word; only the layer id is encoded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

NODE_BITS = 15
NODE_LIMIT = 1 << NODE_BITS
PAYLOAD_BITS = 26
PAYLOAD_LIMIT = 1 << PAYLOAD_BITS

_OP_RESET = 0b100100
_OP_GROW = 0b110100
_OP_FIND = 0b000100
_OP_LOAD = 0b011100
_DIR_CODE = {0: 0b00, 1: 0b01, -1: 0b11}
_DIR_VALUE = {v: k for k, v in _DIR_CODE.items()}


class CodecError(ValueError):
    """An instruction field is out of range or a word does not decode."""


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class SetDirection:
    node: int
    direction: int


@dataclass(frozen=True)
class Grow:
    length: int


@dataclass(frozen=True)
class SetCover:
    old: int
    new: int


@dataclass(frozen=True)
class FindConflict:
    pass


@dataclass(frozen=True)
class LoadDefects:
    layer: int
    defect_bits: tuple[bool, ...] = ()


Instruction = Union[Reset, SetDirection, Grow, SetCover, FindConflict, LoadDefects]


@dataclass(frozen=True)
class NoObstacle:
    """No conflict; nodes may grow by ``max_growth`` (``None`` means unbounded)."""

    max_growth: int | None


@dataclass(frozen=True)
class Conflict:
    """Two nodes with positive combined growth touch across ``edge``.

    ``edge`` is ``None`` when the touch happens through a zero-radius defect
    vertex ``pivot`` that belongs to a shrinking node.
    """

    v1: int
    v2: int
    node1: int
    node2: int
    touch1: int
    touch2: int
    edge: int | None
    pivot: int | None = None


Response = Union[NoObstacle, Conflict]


def _check_node(value: int, name: str) -> None:
    if not isinstance(value, int) or not 0 <= value < NODE_LIMIT:
        raise CodecError(f"{name} must fit in {NODE_BITS} bits, got {value!r}")


def _check_payload(value: int, name: str) -> None:
    if not isinstance(value, int) or not 0 <= value < PAYLOAD_LIMIT:
        raise CodecError(f"{name} must fit in {PAYLOAD_BITS} bits, got {value!r}")


def encode(instr: Instruction) -> int:
    """Pack an instruction into its 32-bit word."""
    if isinstance(instr, Reset):
        return _OP_RESET
    if isinstance(instr, FindConflict):
        return _OP_FIND
    if isinstance(instr, Grow):
        _check_payload(instr.length, "grow length")
        return (instr.length << 6) | _OP_GROW
    if isinstance(instr, LoadDefects):
        _check_payload(instr.layer, "layer id")
        return (instr.layer << 6) | _OP_LOAD
    if isinstance(instr, SetCover):
        _check_node(instr.old, "old node")
        _check_node(instr.new, "new node")
        return (instr.old << 17) | (instr.new << 2) | 0b01
    if isinstance(instr, SetDirection):
        _check_node(instr.node, "node")
        if instr.direction not in _DIR_CODE:
            raise CodecError(f"direction must be -1, 0 or +1, got {instr.direction!r}")
        return (instr.node << 17) | (_DIR_CODE[instr.direction] << 15)
    raise CodecError(f"not an instruction: {instr!r}")


def decode(word: int) -> Instruction:
    """Unpack a 32-bit word; reserved bits must be zero."""
    if not isinstance(word, int) or not 0 <= word < (1 << 32):
        raise CodecError(f"instruction word must be a 32-bit unsigned integer, got {word!r}")
    low = word & 0b11
    if low == 0b01:
        return SetCover(word >> 17, (word >> 2) & (NODE_LIMIT - 1))
    if low != 0b00:
        raise CodecError(f"unknown opcode in word {word:#010x}")
    op = word & 0b111111
    payload = word >> 6
    if op == _OP_RESET and payload == 0:
        return Reset()
    if op == _OP_FIND and payload == 0:
        return FindConflict()
    if op == _OP_GROW:
        return Grow(payload)
    if op == _OP_LOAD:
        return LoadDefects(payload)
    if op == 0 and (word >> 2) & 0x1FFF == 0:
        code = (word >> 15) & 0b11
        if code not in _DIR_VALUE:
            raise CodecError(f"invalid direction code {code:#04b}")
        return SetDirection(word >> 17, _DIR_VALUE[code])
    raise CodecError(f"unknown opcode or nonzero reserved bits in word {word:#010x}")
