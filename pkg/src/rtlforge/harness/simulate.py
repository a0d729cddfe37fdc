"""Two-state interpreter for the supported Verilog subset.

Used as the degraded validation engine when no external simulator is
installed, and as the stimulus/oracle backend for functional comparison.

Semantics (documented conventions, identical for anchor and candidate, so
comparisons are convention-consistent):
  - two-state values (0/1 bits), registers initialise to 0
  - unsigned arithmetic; binary operators evaluate at max(operand widths)
  - division/modulo by zero yield 0
  - combinational items (assigns, @(*) and plain-event always blocks) are
    evaluated in source order to a fixpoint; non-convergence within the
    iteration budget raises SimulationUnstable
  - multiple drivers resolve by source order (last write wins)
  - edge-sensitive blocks run when a listed edge fires; blocking writes apply
    immediately, non-blocking writes commit after all triggered blocks
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import ForgeError
from ..frontend import (
    Always,
    Binary,
    Block,
    Case,
    Concat,
    ContAssign,
    Ident,
    If,
    Module,
    NetDecl,
    Number,
    ParamDecl,
    ProcAssign,
    Select,
    Ternary,
    Unary,
)

CLOCK_NAMES = ("clk", "clock")
RESET_NAMES = ("rst", "reset")

_MAX_SETTLE_ITERS = 64


class SimulationUnstable(ForgeError):
    """Combinational evaluation failed to reach a fixpoint."""


class UnsupportedDesign(ForgeError):
    """Design uses constructs outside the interpreter's subset."""


def _mask(width: int) -> int:
    return (1 << width) - 1


@dataclass
class _Signal:
    width: int
    lsb: int  # bit index of the least-significant declared position


class DesignModel:
    """Elaborated, executable view of a single module."""

    def __init__(self, module: Module):
        self.module = module
        self.params: dict[str, int] = {}
        self.signals: dict[str, _Signal] = {}
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self._elaborate()
        self.comb_items = [
            item
            for item in module.items
            if isinstance(item, ContAssign)
            or (isinstance(item, Always) and not self._is_edge_block(item))
        ]
        self.seq_blocks = [
            item for item in module.items if isinstance(item, Always) and self._is_edge_block(item)
        ]
        self.is_sequential = bool(self.seq_blocks)
        self.clock = next((n for n in self.inputs if n in CLOCK_NAMES), None)
        self.reset = next((n for n in self.inputs if n in RESET_NAMES), None)

    @staticmethod
    def _is_edge_block(item: Always) -> bool:
        return item.events is not None and any(e.edge for e in item.events)

    def _const(self, expr) -> int:
        if isinstance(expr, Number):
            return expr.value
        if isinstance(expr, Ident):
            if expr.name in self.params:
                return self.params[expr.name]
            raise UnsupportedDesign(f"non-constant range expression {expr.name!r}")
        if isinstance(expr, Binary):
            l, r = self._const(expr.left), self._const(expr.right)
            ops = {"+": l + r, "-": l - r, "*": l * r}
            if expr.op in ops:
                return ops[expr.op]
        raise UnsupportedDesign("unsupported constant expression in range")

    def _elaborate(self):
        for item in self.module.items:
            if isinstance(item, ParamDecl):
                self.params[item.name] = self._eval_const_expr(item.value)

        def add(name: str, rng) -> None:
            if rng is None:
                self.signals[name] = _Signal(1, 0)
            else:
                msb, lsb = self._const(rng.msb), self._const(rng.lsb)
                lo, hi = min(msb, lsb), max(msb, lsb)
                self.signals[name] = _Signal(hi - lo + 1, lo)

        for p in self.module.ports:
            if p.direction == "inout":
                raise UnsupportedDesign("inout ports are not simulated")
            add(p.name, p.range)
            (self.inputs if p.direction == "input" else self.outputs).append(p.name)
        for item in self.module.items:
            if isinstance(item, NetDecl):
                for n in item.names:
                    if n not in self.signals:
                        add(n, item.range)

    def _eval_const_expr(self, expr) -> int:
        env = {n: 0 for n in self.signals}
        env.update(self.params)
        value, _ = _eval(expr, env, self)
        return value

    # ---- state ----

    def initial_env(self) -> dict[str, int]:
        env = {n: 0 for n in self.signals}
        env.update(self.params)
        return env

    def width_of(self, name: str) -> int:
        if name in self.signals:
            return self.signals[name].width
        return 32  # parameters

    def lsb_of(self, name: str) -> int:
        return self.signals[name].lsb if name in self.signals else 0

    # ---- evaluation ----

    def settle(self, env: dict[str, int]):
        for _ in range(_MAX_SETTLE_ITERS):
            before = dict(env)
            for item in self.comb_items:
                if isinstance(item, ContAssign):
                    value, _ = _eval(item.value, env, self)
                    _write(item.target, value, env, self)
                else:
                    _exec_stmt(item.body, env, self, nba=None)
            if env == before:
                return
        raise SimulationUnstable("combinational loop did not settle")

    def apply_inputs(self, env: dict[str, int], inputs: dict[str, int], prev: dict[str, int]):
        """Drive inputs, fire any edge blocks sensitised to them, settle."""
        for k, v in inputs.items():
            env[k] = v & _mask(self.width_of(k))
        self._fire_edges(env, prev)
        self.settle(env)

    def clock_cycle(self, env: dict[str, int], inputs: dict[str, int]):
        """One clock cycle: inputs at clock-low, then a rising edge."""
        if self.clock is None:
            raise UnsupportedDesign("sequential design without a recognised clock input")
        prev = dict(env)
        env[self.clock] = 0
        self.apply_inputs(env, inputs, prev)
        prev = dict(env)
        env[self.clock] = 1
        self._fire_edges(env, prev)
        self.settle(env)

    def _fire_edges(self, env: dict[str, int], prev: dict[str, int]):
        triggered = []
        for block in self.seq_blocks:
            for ev in block.events or []:
                if ev.edge is None:
                    continue
                old = prev.get(ev.signal, 0) & 1
                new = env.get(ev.signal, 0) & 1
                if (ev.edge == "posedge" and old == 0 and new == 1) or (
                    ev.edge == "negedge" and old == 1 and new == 0
                ):
                    triggered.append(block)
                    break
        if not triggered:
            return
        nba: dict[str, int] = {}
        for block in triggered:
            _exec_stmt(block.body, env, self, nba=nba)
        for name, value in nba.items():
            env[name] = value

    def read_outputs(self, env: dict[str, int]) -> dict[str, int]:
        return {n: env[n] for n in self.outputs}


def _eval(expr, env: dict[str, int], model: DesignModel) -> tuple[int, int]:
    """Evaluate to (value, width)."""
    if isinstance(expr, Number):
        return expr.value, expr.width if expr.width else 32
    if isinstance(expr, Ident):
        return env.get(expr.name, 0), model.width_of(expr.name)
    if isinstance(expr, Unary):
        v, w = _eval(expr.operand, env, model)
        if expr.op == "~":
            return (~v) & _mask(w), w
        if expr.op == "!":
            return (0 if v else 1), 1
        if expr.op == "-":
            return (-v) & _mask(w), w
        return v, w  # unary +
    if isinstance(expr, Binary):
        lv, lw = _eval(expr.left, env, model)
        rv, rw = _eval(expr.right, env, model)
        w = max(lw, rw)
        m = _mask(w)
        op = expr.op
        if op == "&&":
            return (1 if (lv and rv) else 0), 1
        if op == "||":
            return (1 if (lv or rv) else 0), 1
        if op == "==":
            return (1 if lv == rv else 0), 1
        if op == "!=":
            return (1 if lv != rv else 0), 1
        if op == "<":
            return (1 if lv < rv else 0), 1
        if op == "<=":
            return (1 if lv <= rv else 0), 1
        if op == ">":
            return (1 if lv > rv else 0), 1
        if op == ">=":
            return (1 if lv >= rv else 0), 1
        if op == "&":
            return lv & rv, w
        if op == "|":
            return lv | rv, w
        if op == "^":
            return lv ^ rv, w
        if op == "+":
            return (lv + rv) & m, w
        if op == "-":
            return (lv - rv) & m, w
        if op == "*":
            return (lv * rv) & m, w
        if op == "/":
            return (lv // rv if rv else 0) & m, w
        if op == "%":
            return (lv % rv if rv else 0) & m, w
        if op == "<<":
            return (lv << min(rv, 64)) & _mask(lw), lw
        if op == ">>":
            return (lv >> min(rv, 64)), lw
        raise UnsupportedDesign(f"operator {op!r} not simulated")
    if isinstance(expr, Ternary):
        cv, _ = _eval(expr.cond, env, model)
        tv, tw = _eval(expr.then, env, model)
        ov, ow = _eval(expr.other, env, model)
        return (tv if cv else ov), max(tw, ow)
    if isinstance(expr, Concat):
        value = 0
        width = 0
        for part in expr.parts:
            pv, pw = _eval(part, env, model)
            value = (value << pw) | (pv & _mask(pw))
            width += pw
        return value, width
    if isinstance(expr, Select):
        base_v = env.get(expr.base.name, 0)
        lsb0 = model.lsb_of(expr.base.name)
        msb_v, _ = _eval(expr.msb, env, model)
        if expr.lsb is None:
            return (base_v >> (msb_v - lsb0)) & 1, 1
        lsb_v, _ = _eval(expr.lsb, env, model)
        lo, hi = min(msb_v, lsb_v), max(msb_v, lsb_v)
        w = hi - lo + 1
        return (base_v >> (lo - lsb0)) & _mask(w), w
    raise UnsupportedDesign(f"expression {type(expr).__name__} not simulated")


def _write(target, value: int, env: dict[str, int], model: DesignModel, nba=None):
    if isinstance(target, Ident):
        name = target.name
        masked = value & _mask(model.width_of(name))
        if nba is None:
            env[name] = masked
        else:
            nba[name] = masked
        return
    if isinstance(target, Select):
        name = target.base.name
        lsb0 = model.lsb_of(name)
        msb_v, _ = _eval(target.msb, env, model)
        if target.lsb is None:
            lo = hi = msb_v - lsb0
        else:
            lsb_v, _ = _eval(target.lsb, env, model)
            lo, hi = min(msb_v, lsb_v) - lsb0, max(msb_v, lsb_v) - lsb0
        w = hi - lo + 1
        # merge onto any pending non-blocking value so successive bit writes
        # within one block compose
        if nba is not None and name in nba:
            cur = nba[name]
        else:
            cur = env.get(name, 0)
        cleared = cur & ~(_mask(w) << lo)
        merged = cleared | ((value & _mask(w)) << lo)
        merged &= _mask(model.width_of(name))
        if nba is None:
            env[name] = merged
        else:
            nba[name] = merged
        return
    raise UnsupportedDesign(f"assignment target {type(target).__name__} not simulated")


def _exec_stmt(stmt, env: dict[str, int], model: DesignModel, nba):
    if isinstance(stmt, Block):
        for s in stmt.stmts:
            _exec_stmt(s, env, model, nba)
        return
    if isinstance(stmt, If):
        cond, _ = _eval(stmt.cond, env, model)
        if cond:
            _exec_stmt(stmt.then_stmt, env, model, nba)
        elif stmt.else_stmt is not None:
            _exec_stmt(stmt.else_stmt, env, model, nba)
        return
    if isinstance(stmt, Case):
        subject, _ = _eval(stmt.subject, env, model)
        default = None
        for item in stmt.items:
            if item.labels is None:
                default = item
                continue
            if any(_eval(lbl, env, model)[0] == subject for lbl in item.labels):
                _exec_stmt(item.body, env, model, nba)
                return
        if default is not None:
            _exec_stmt(default.body, env, model, nba)
        return
    if isinstance(stmt, ProcAssign):
        value, _ = _eval(stmt.value, env, model)
        # Blocking writes land immediately; non-blocking buffer when an edge
        # block supplies a buffer, otherwise they behave like blocking (the
        # combinational-always case).
        _write(stmt.target, value, env, model, nba=None if stmt.blocking or nba is None else nba)
        return
    raise UnsupportedDesign(f"statement {type(stmt).__name__} not simulated")


# ---- stimulus generation ----


def input_bit_count(model: DesignModel) -> int:
    return sum(model.signals[n].width for n in model.inputs)


def data_inputs(model: DesignModel) -> list[str]:
    """Inputs excluding the recognised clock (driven by the harness)."""
    return [n for n in model.inputs if n != model.clock]


def exhaustive_vectors(model: DesignModel):
    names = list(model.inputs)
    widths = [model.signals[n].width for n in names]
    total = sum(widths)
    for combo in range(1 << total):
        vec = {}
        shift = 0
        for name, w in zip(names, widths):
            vec[name] = (combo >> shift) & _mask(w)
            shift += w
        yield vec


def random_vectors(model: DesignModel, count: int, seed: int, names=None) -> list[dict[str, int]]:
    rng = random.Random(seed)
    names = list(model.inputs) if names is None else names
    out = []
    for _ in range(count):
        out.append({n: rng.getrandbits(model.signals[n].width) for n in names})
    return out


def sequential_stimulus(model: DesignModel, cycles: int, seed: int) -> list[dict[str, int]]:
    """Per-cycle input maps: one reset pulse over the first two cycles, then
    seeded random data."""
    names = data_inputs(model)
    vectors = random_vectors(model, cycles, seed, names=names)
    for i, vec in enumerate(vectors):
        if model.reset is not None:
            vec[model.reset] = 1 if i < 2 else 0
    return vectors


def run_combinational(model: DesignModel, vectors) -> list[dict[str, int]]:
    outs = []
    env = model.initial_env()
    prev = dict(env)
    for vec in vectors:
        model.apply_inputs(env, vec, prev)
        prev = dict(env)
        outs.append(model.read_outputs(env))
    return outs


def run_sequential(model: DesignModel, per_cycle_inputs) -> list[dict[str, int]]:
    outs = []
    env = model.initial_env()
    for vec in per_cycle_inputs:
        model.clock_cycle(env, vec)
        outs.append(model.read_outputs(env))
    return outs
