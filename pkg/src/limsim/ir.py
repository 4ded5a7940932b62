"""Backend-neutral bulk-bitwise programs.

A :class:`BitProgram` is a straight-line list of row-wide Boolean operations
over named row vectors.  Every non-input variable is assigned exactly once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .bits import RowVector, majority
from .errors import (
    ProgramError,
    Reassignment,
    UnassignedOperand,
    UndeclaredOperand,
    WidthMismatch,
)

ROLES = ("input", "output", "scratch", "const0", "const1")
ARITY = {"NOT": 1, "AND": 2, "OR": 2, "NAND": 2, "NOR": 2, "XOR": 2, "XNOR": 2,
         "COPY": 1, "CONST": 0, "MAJ": 3}
TWO_INPUT_OPS = ("AND", "OR", "NAND", "NOR", "XOR", "XNOR")


@dataclass(frozen=True)
class Decl:
    name: str
    role: str
    width: Optional[int] = None


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple
    result: str
    value: Optional[int] = None        # CONST only


@dataclass
class BitProgram:
    decls: list = field(default_factory=list)
    ops: list = field(default_factory=list)
    _tmp: int = field(default=0, repr=False, compare=False)

    # building -----------------------------------------------------------
    def declare(self, name: str, role: str, width: Optional[int] = None) -> str:
        self.decls.append(Decl(name, role, width))
        return name

    def add(self, op: str, args, result: str, value: Optional[int] = None) -> str:
        self.ops.append(Op(op, tuple(args), result, value))
        return result

    def emit(self, op: str, *args, out: Optional[str] = None, value: Optional[int] = None) -> str:
        """Append ``op`` writing a fresh scratch variable (or the declared ``out``)."""
        if out is None:
            out = f"t{self._tmp}"
            self._tmp += 1
            self.declare(out, "scratch")
        return self.add(op, args, out, value)

    # queries ------------------------------------------------------------
    def roles(self) -> dict:
        return {d.name: d.role for d in self.decls}

    def names(self, role: str) -> list:
        return [d.name for d in self.decls if d.role == role]

    @property
    def inputs(self) -> list:
        return self.names("input")

    @property
    def outputs(self) -> list:
        return self.names("output")

    def op_counts(self) -> dict:
        counts: dict = {}
        for o in self.ops:
            counts[o.op] = counts.get(o.op, 0) + 1
        return counts

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        decls = []
        for d in self.decls:
            e = {"name": d.name, "role": d.role}
            if d.width is not None:
                e["width"] = d.width
            decls.append(e)
        ops = []
        for o in self.ops:
            args = [o.value] if o.op == "CONST" else list(o.args)
            ops.append({"op": o.op, "args": args, "result": o.result})
        return {"decls": decls, "ops": ops}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "BitProgram":
        p = cls()
        for e in d.get("decls", []):
            p.declare(e["name"], e["role"], e.get("width"))
        for e in d.get("ops", []):
            if e["op"] == "CONST":
                p.add("CONST", (), e["result"], value=int(e["args"][0]))
            else:
                p.add(e["op"], e["args"], e["result"])
        return p

    @classmethod
    def from_json(cls, text: str) -> "BitProgram":
        return cls.from_dict(json.loads(text))


def validate(program: BitProgram) -> None:
    """Raise on the first violation of the program invariants; return None if valid."""
    roles: dict = {}
    widths = set()
    for d in program.decls:
        if d.role not in ROLES:
            raise ProgramError(f"variable {d.name!r} has unknown role {d.role!r}")
        if d.name in roles:
            raise ProgramError(f"variable {d.name!r} declared twice")
        roles[d.name] = d.role
        if d.width is not None:
            widths.add(d.width)
    if len(widths) > 1:
        raise WidthMismatch(f"declared widths differ: {sorted(widths)}")

    defined = {n for n, r in roles.items() if r in ("input", "const0", "const1")}
    assigned: set = set()
    for i, o in enumerate(program.ops):
        if o.op not in ARITY:
            raise ProgramError(f"op {i}: unknown operation {o.op!r}")
        if len(o.args) != ARITY[o.op]:
            raise ProgramError(f"op {i}: {o.op} takes {ARITY[o.op]} operands, got {len(o.args)}")
        if o.op == "CONST" and o.value not in (0, 1):
            raise ProgramError(f"op {i}: CONST value must be 0 or 1")
        for a in o.args:
            if a not in roles:
                raise UndeclaredOperand(a)
            if a not in defined:
                raise UnassignedOperand(f"op {i}: {a!r} is read before it is assigned")
        if o.result not in roles:
            raise UndeclaredOperand(o.result)
        if roles[o.result] not in ("output", "scratch"):
            raise Reassignment(f"op {i}: {o.result!r} has role {roles[o.result]} and cannot be assigned")
        if o.result in assigned:
            raise Reassignment(o.result)
        assigned.add(o.result)
        defined.add(o.result)
    for n, r in roles.items():
        if r == "output" and n not in assigned:
            raise UnassignedOperand(f"output {n!r} is never assigned")


def interpret(program: BitProgram, inputs: dict, width: Optional[int] = None) -> dict:
    """Evaluate a program directly on row vectors (reference semantics)."""
    validate(program)
    roles = program.roles()
    if width is None:
        if inputs:
            width = next(iter(inputs.values())).width
        else:
            raise ValueError("width is required for a program without inputs")
    env: dict = {}
    for name, role in roles.items():
        if role == "input":
            if name not in inputs:
                raise KeyError(f"missing input {name!r}")
            if inputs[name].width != width:
                raise WidthMismatch(f"input {name!r} has width {inputs[name].width}, expected {width}")
            env[name] = inputs[name]
        elif role == "const0":
            env[name] = RowVector.zeros(width)
        elif role == "const1":
            env[name] = RowVector.ones(width)
    for o in program.ops:
        a = [env[x] for x in o.args]
        if o.op == "NOT":
            r = ~a[0]
        elif o.op == "AND":
            r = a[0] & a[1]
        elif o.op == "OR":
            r = a[0] | a[1]
        elif o.op == "NAND":
            r = ~(a[0] & a[1])
        elif o.op == "NOR":
            r = ~(a[0] | a[1])
        elif o.op == "XOR":
            r = a[0] ^ a[1]
        elif o.op == "XNOR":
            r = ~(a[0] ^ a[1])
        elif o.op == "COPY":
            r = a[0]
        elif o.op == "CONST":
            r = RowVector.filled(width, o.value)
        else:
            r = majority(*a)
        env[o.result] = r
    return {n: env[n] for n in program.outputs}
