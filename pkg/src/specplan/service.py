"""Driver-assist loop for the tracked vehicle: a human streams velocity
commands, the planner adjusts them each tick to track the commanded speed
while avoiding hazard contact.

The simulation tick is a pure function (world in, world and messages out),
so the headless scripted runner and the WebSocket service share one code
path. Single-writer concurrency: only the ticker mutates the world; socket
handlers merely deposit the latest command.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .expansion import ExpansionOptions, SpectralExpander
from .mdp import clip_action
from .protocol import DriveMessage, MessageCounter, ProtocolError, SequenceTracker, decode, encode
from .tree import SearchBudget, SearchResult, UcbConstants, search
from .envs import HazardGrid, TrackedVehicleConfig, make_tracked_vehicle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServiceConfig:
    tick_dt: float = 0.1
    plan_horizon: int = 16          # steps (1.6 s lookahead)
    branch_len: int = 2
    budget_iters: Optional[int] = 40
    budget_ms: Optional[float] = 80.0  # used when budget_iters is None
    footprint_radius: float = 0.3
    degradation_on: tuple = (-0.25, 0.0, 0.0, 0.0)
    degradation_period_s: float = 10.0
    degradation_jitter_s: float = 2.0
    pace: float = 1.0               # sim-seconds per wall-second; 0 = free-run
    start_pose: tuple = (1.0, 1.5, 0.0, 0.3, 0.0)  # x, y, theta, v, omega
    seed: int = 0


@dataclass(frozen=True)
class WorldState:
    """Immutable simulation snapshot."""

    tick: int
    state: np.ndarray                   # (5,) vehicle state
    degraded: bool
    next_toggle_tick: int
    safety_count: int
    in_contact: bool


@dataclass
class TickOutput:
    world: WorldState
    messages: list    # (kind, payload) pairs, not yet sequence-stamped
    plan: Optional[SearchResult]


def _budget(cfg: ServiceConfig) -> SearchBudget:
    if cfg.budget_iters is not None:
        return SearchBudget(max_iterations=cfg.budget_iters)
    return SearchBudget(max_wall_time=cfg.budget_ms / 1000.0)


def initial_world(cfg: ServiceConfig, rng: np.random.Generator) -> WorldState:
    return WorldState(tick=0, state=np.asarray(cfg.start_pose, dtype=float),
                      degraded=False,
                      next_toggle_tick=_next_toggle(cfg, rng, 0),
                      safety_count=0, in_contact=False)


def _next_toggle(cfg: ServiceConfig, rng: np.random.Generator, tick: int) -> int:
    jitter = rng.uniform(-cfg.degradation_jitter_s, cfg.degradation_jitter_s)
    period = max(cfg.degradation_period_s + jitter, cfg.tick_dt)
    return tick + max(int(round(period / cfg.tick_dt)), 1)


def _vehicle_mdp(cfg: ServiceConfig, hazard: Optional[HazardGrid],
                 command: np.ndarray, degraded: bool):
    veh = TrackedVehicleConfig(
        dt=cfg.tick_dt, horizon=cfg.plan_horizon,
        command=(float(command[0]), float(command[1])),
        degradation=cfg.degradation_on if degraded else (0.0, 0.0, 0.0, 0.0),
        footprint_radius=cfg.footprint_radius,
    )
    return make_tracked_vehicle(veh, hazard)


def plan_for(cfg: ServiceConfig, hazard: Optional[HazardGrid], state: np.ndarray,
             command: np.ndarray, degraded: bool, seed: int) -> Optional[SearchResult]:
    """One receding-horizon plan from the given state; None if unplannable."""
    mdp = _vehicle_mdp(cfg, hazard, command, degraded)
    if not mdp.state_ok(state):
        return None
    opts = ExpansionOptions(branch_len=cfg.branch_len, gain_mode="finite_horizon",
                            time_invariant_lin=True)
    expander = SpectralExpander(mdp, opts)
    return search(mdp, state, expander, _budget(cfg), seed=seed)


def service_tick(cfg: ServiceConfig, hazard: Optional[HazardGrid],
                 world: WorldState, latest_command: np.ndarray,
                 current_plan: Optional[SearchResult],
                 rng: np.random.Generator, assist: bool = True) -> TickOutput:
    """Advance the simulation one step along the active plan, then replan.

    With ``assist`` off the raw driver command is executed (pass-through
    comparison mode). Collisions are edge-counted; a colliding vehicle
    crash-stops in place.
    """
    messages = []
    tick = world.tick + 1
    degraded = world.degraded
    next_toggle = world.next_toggle_tick
    if tick >= next_toggle:
        degraded = not degraded
        next_toggle = _next_toggle(cfg, rng, tick)
        messages.append(("event", {"type": "degradation_on" if degraded else "degradation_off",
                                   "tick": tick}))

    if assist and current_plan is not None and len(current_plan.best_trajectory) > 0:
        action = current_plan.best_trajectory.actions[0]
    elif assist:
        action = np.zeros(2)
    else:
        action = latest_command
    sim_mdp = _vehicle_mdp(cfg, hazard, latest_command, degraded)
    action = clip_action(np.asarray(action, dtype=float), sim_mdp.action_box)
    new_state = np.asarray(sim_mdp.dynamics(world.state, action), dtype=float)

    hit = bool(sim_mdp.unsafe(new_state)) or not sim_mdp.state_box.contains(new_state)
    safety_count = world.safety_count
    contact = world.in_contact
    if hit:
        if not world.in_contact:
            safety_count += 1
            messages.append(("event", {"type": "collision", "tick": tick}))
        contact = True
    elif contact and _clear_of_hazard(cfg, hazard, new_state):
        # hysteresis: a contact episode ends once the padded footprint is
        # fully clear, so scraping along a wall counts once
        contact = False

    plan = None
    if assist:
        plan = plan_for(cfg, hazard, new_state, latest_command, degraded, seed=cfg.seed + tick)

    new_world = WorldState(tick=tick, state=new_state, degraded=degraded,
                           next_toggle_tick=next_toggle, safety_count=safety_count,
                           in_contact=contact)
    messages.append(("state", state_payload(cfg, new_world)))
    if plan is not None:
        messages.append(("plan", plan_payload(plan)))
    return TickOutput(world=new_world, messages=messages, plan=plan)


def _clear_of_hazard(cfg: ServiceConfig, hazard: Optional[HazardGrid],
                     state: np.ndarray, pad: float = 0.15) -> bool:
    if hazard is None:
        return True
    from .envs.hazard import footprint_offsets

    for dx, dy in footprint_offsets(cfg.footprint_radius + pad, hazard.resolution):
        if hazard.blocked_at(state[0] + dx, state[1] + dy):
            return False
    return True


def state_payload(cfg: ServiceConfig, world: WorldState) -> dict:
    x = world.state
    deg = list(cfg.degradation_on) if world.degraded else [0.0, 0.0, 0.0, 0.0]
    return {"tick": world.tick, "x": float(x[0]), "y": float(x[1]),
            "theta": float(x[2]), "v": float(x[3]), "omega": float(x[4]),
            "degradation": deg, "safety_count": world.safety_count}


def plan_payload(plan: SearchResult) -> dict:
    pts = plan.best_trajectory.states[:, :2]
    return {"points": [[float(a), float(b)] for a, b in pts],
            "value": float(plan.best_return),
            "confidence": [float(c) for c in plan.confidence_by_depth]}


@dataclass
class ScriptedRunResult:
    collisions: int
    states: np.ndarray
    events: list


def run_scripted(cfg: ServiceConfig, hazard: HazardGrid,
                 command_fn: Callable[[int], tuple], ticks: int,
                 assist: bool = True, seed: int = 0) -> ScriptedRunResult:
    """Headless deterministic run: scripted driver commands, no sockets."""
    rng = np.random.default_rng(seed)
    world = initial_world(cfg, rng)
    plan: Optional[SearchResult] = None
    states = [world.state]
    events = []
    box_lo = np.array([-1.0, -1.0])
    box_hi = np.array([1.0, 1.0])
    for tick in range(ticks):
        cmd = np.clip(np.asarray(command_fn(tick), dtype=float), box_lo, box_hi)
        out = service_tick(cfg, hazard, world, cmd, plan, rng, assist=assist)
        world = out.world
        plan = out.plan
        states.append(world.state)
        events.extend(p for k, p in out.messages if k == "event")
    return ScriptedRunResult(collisions=world.safety_count,
                             states=np.asarray(states), events=events)


def make_chicane_map() -> HazardGrid:
    """Desk-scale chicane corridor: bordered rectangle with two baffles."""
    rows, cols = 14, 24  # 7 m x 12 m at 0.5 m resolution
    cells = np.zeros((rows, cols), dtype=bool)
    cells[0, :] = cells[-1, :] = True
    cells[:, 0] = cells[:, -1] = True
    cells[1:9, 8] = True     # baffle from the bottom wall
    cells[5:13, 16] = True   # baffle from the top wall
    return HazardGrid(origin=np.array([0.0, 0.0]), resolution=0.5, cells=cells)


def adversarial_trace(tick: int) -> tuple:
    """Full-speed driving with slow steering sweeps: collides if unassisted."""
    t = tick * 0.1
    omega = 0.5 * np.sin(2 * np.pi * t / 12.0)
    return (1.0, omega)


def build_app(cfg: ServiceConfig = ServiceConfig(),
              hazard: Optional[HazardGrid] = None) -> FastAPI:
    """FastAPI application exposing /drive (WebSocket), /map and /health."""
    if hazard is None:
        hazard = make_chicane_map()

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        runtime["ticker"] = asyncio.create_task(ticker())
        try:
            yield
        finally:
            runtime["ticker"].cancel()

    app = FastAPI(title="drive-assist", lifespan=lifespan)
    rng = np.random.default_rng(cfg.seed)
    runtime = {
        "world": initial_world(cfg, rng),
        "plan": None,
        "command": np.zeros(2),
        "clients": {},           # websocket -> asyncio.Queue
        "ticker": None,
    }

    def snapshot_payload():
        return state_payload(cfg, runtime["world"])

    async def ticker():
        loop = asyncio.get_event_loop()
        next_deadline = loop.time()
        while True:
            if cfg.pace > 0:
                next_deadline += cfg.tick_dt / cfg.pace
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = loop.time()
            else:
                await asyncio.sleep(0)
            if not runtime["clients"]:
                next_deadline = loop.time()  # paused: no client connected
                continue
            out = await loop.run_in_executor(
                None, service_tick, cfg, hazard, runtime["world"],
                runtime["command"], runtime["plan"], rng)
            runtime["world"] = out.world
            runtime["plan"] = out.plan
            for queue, counter in list(runtime["clients"].values()):
                for kind, payload in out.messages:
                    _offer(queue, counter.stamp(kind, payload))

    def _offer(queue: asyncio.Queue, msg: DriveMessage):
        try:
            queue.put_nowait(msg)
        except asyncio.QueueFull:
            pass  # slow client: drop rather than stall the sim

    @app.get("/health")
    def health():
        return {"status": "ok", "tick": runtime["world"].tick,
                "clients": len(runtime["clients"])}

    @app.get("/map")
    def map_doc():
        return hazard.to_json_dict()

    @app.websocket("/drive")
    async def drive(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=256)
        counter = MessageCounter()
        tracker = SequenceTracker()
        runtime["clients"][ws] = (queue, counter)
        await ws.send_text(encode(counter.stamp("hello", {"version": 1})))
        await ws.send_text(encode(counter.stamp("config", {
            "tick_dt": cfg.tick_dt, "plan_horizon": cfg.plan_horizon,
            "branch_len": cfg.branch_len})))
        await ws.send_text(encode(counter.stamp("state", snapshot_payload())))

        async def pump_out():
            while True:
                msg = await queue.get()
                await ws.send_text(encode(msg))

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = decode(text)
                except ProtocolError as exc:
                    _offer(queue, counter.stamp("event",
                                                {"type": "protocol_error",
                                                 "detail": str(exc)}))
                    continue
                if not tracker.accept(msg):
                    _offer(queue, counter.stamp("event",
                                                {"type": "protocol_error",
                                                 "detail": "out-of-order seq",
                                                 "seq": msg.seq}))
                    continue
                if msg.kind == "command":
                    v = float(msg.payload.get("v_d", 0.0))
                    w = float(msg.payload.get("omega_d", 0.0))
                    runtime["command"] = np.clip(np.array([v, w]), -1.0, 1.0)
                elif msg.kind == "hello":
                    _offer(queue, counter.stamp("state", snapshot_payload()))
                else:
                    _offer(queue, counter.stamp("event",
                                                {"type": "protocol_error",
                                                 "detail": f"unexpected kind '{msg.kind}'"}))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            runtime["clients"].pop(ws, None)
            if not runtime["clients"]:
                runtime["command"] = np.zeros(2)
    return app
