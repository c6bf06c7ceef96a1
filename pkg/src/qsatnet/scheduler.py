"""Per-slot weight construction and the four assignment policies.

A slot instance carries the entanglement rate each satellite could deliver
to each ground-station pair (and, in reflection mode, each source/relay
satellite combination), plus the capacity caps.  Policies turn an instance
into an integral allocation: rate-sum maximizes aggregate rate, rate-fair
runs iterative max-min on contention-normalized rates, and the two
special-case solvers exploit unit-capacity structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .environment import EnvironmentTable, effective_transmissivity
from .errors import (
    ConfigurationError,
    IngestionError,
    ModeError,
    SizeLimitError,
    StructuralError,
    UnknownIdError,
)
from .ilpcore import (
    GAP_LIMIT,
    OPTIMAL,
    LinearProgram,
    MipProblem,
    hungarian,
    mwis_exact,
    solve_mip,
)
from .linkphys import (
    ArmChannel,
    OpticsParams,
    SourceParams,
    arm_transmissivity,
    dark_click_prob,
    end_to_end_outcome,
    free_space_transmissivity,
    reflection_arms,
)
from .orbital import ConstellationSnapshot, GroundStation

SATURATION_REL_TOL = 1e-6
LAMBDA_SLACK = 1e-9


@dataclass(frozen=True)
class PairSpec:
    id: str
    station_a: str
    station_b: str
    pair_cap: int = 1

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigurationError("pair id must be nonempty")
        if self.station_a == self.station_b:
            raise ConfigurationError(f"pair {self.id}: stations must differ")
        if self.pair_cap < 0:
            raise ConfigurationError(f"pair {self.id}: negative pair cap")


@dataclass(frozen=True)
class PhysicsParams:
    """Source, optics, and detector-gate parameters shared by all links."""

    source: SourceParams
    optics: OpticsParams
    detector_gate: float = 1e-9
    filter_bandwidth_nm: float = 1.0
    field_of_view: float = 1e-10
    mirror_radius: float = 1.6

    def __post_init__(self) -> None:
        if self.detector_gate <= 0 or self.filter_bandwidth_nm <= 0:
            raise ConfigurationError("gate duration and filter bandwidth must be positive")
        if self.field_of_view <= 0 or self.mirror_radius <= 0:
            raise ConfigurationError("field of view and mirror radius must be positive")


def default_physics() -> PhysicsParams:
    """Operating point used throughout: a GHz-clocked source at the sweet
    spot of the rate/fidelity tradeoff, 10 cm transmit and 1 m receive
    apertures at 737 nm, and 70 percent efficiency on both ends."""
    return PhysicsParams(
        source=SourceParams(mean_photon_number=0.0078, repetition_rate=1e9),
        optics=OpticsParams(
            tx_radius=0.1,
            rx_radius=1.0,
            wavelength=737e-9,
            tx_efficiency=0.7,
            rx_efficiency=0.7,
        ),
    )


@dataclass(frozen=True, eq=True)
class SlotInstance:
    time: int
    sat_ids: tuple[str, ...]
    station_ids: tuple[str, ...]
    pair_ids: tuple[str, ...]
    pair_stations: tuple[tuple[int, int], ...]
    omega: tuple[tuple[float, ...], ...]
    fidelity: tuple[tuple[float, ...], ...]
    nu: dict[tuple[int, int, int], float] | None
    sat_caps: tuple[int, ...]
    gs_caps: tuple[int, ...]
    pair_caps: tuple[int, ...]
    reflector_caps: tuple[int, ...]

    def __post_init__(self) -> None:
        n_sat = len(self.sat_ids)
        n_gs = len(self.station_ids)
        n_pair = len(self.pair_ids)
        if len(self.pair_stations) != n_pair or len(self.pair_caps) != n_pair:
            raise StructuralError("pair arrays must align with pair_ids")
        if len(self.sat_caps) != n_sat or len(self.reflector_caps) != n_sat:
            raise StructuralError("satellite cap arrays must align with sat_ids")
        if len(self.gs_caps) != n_gs:
            raise StructuralError("station cap array must align with station_ids")
        if len(self.omega) != n_sat or len(self.fidelity) != n_sat:
            raise StructuralError("omega/fidelity must have one row per satellite")
        for row in self.omega:
            if len(row) != n_pair:
                raise StructuralError("omega row length must equal pair count")
            for value in row:
                if value < 0:
                    raise StructuralError("omega entries must be nonnegative")
        for j, (a, b) in enumerate(self.pair_stations):
            if not (0 <= a < n_gs and 0 <= b < n_gs) or a == b:
                raise StructuralError(f"pair {j}: bad station indices ({a}, {b})")
            # scheduling model assumes receivers outnumber pair connections
            for g in (a, b):
                if self.gs_caps[g] < self.pair_caps[j]:
                    raise ConfigurationError(
                        f"station {self.station_ids[g]}: receiver cap "
                        f"{self.gs_caps[g]} below pair cap {self.pair_caps[j]} "
                        f"of pair {self.pair_ids[j]}"
                    )
        if self.nu is not None:
            for (i, k, j), value in self.nu.items():
                if not (0 <= i < n_sat and 0 <= k < n_sat and 0 <= j < n_pair):
                    raise StructuralError(f"reflection key ({i}, {k}, {j}) out of range")
                if i == k:
                    raise StructuralError("self-relay entries are forbidden")
                if value < 0:
                    raise StructuralError("reflection rates must be nonnegative")

    @property
    def num_sats(self) -> int:
        return len(self.sat_ids)

    @property
    def num_pairs(self) -> int:
        return len(self.pair_ids)

    def pairs_at_station(self, g: int) -> list[int]:
        return [j for j, (a, b) in enumerate(self.pair_stations) if g in (a, b)]


@dataclass(frozen=True)
class Allocation:
    """Integral assignment: x[sat][pair] plus sparse reflection counts."""

    x: tuple[tuple[int, ...], ...]
    y: tuple[tuple[int, int, int, int], ...]
    objective: float


def zero_allocation(instance: SlotInstance) -> Allocation:
    x = tuple((0,) * instance.num_pairs for _ in range(instance.num_sats))
    return Allocation(x=x, y=(), objective=0.0)


# ---------------------------------------------------------------------------
# weight construction


def _station_link_table(snapshot, network, min_elevation):
    """elevation and slant range for every (station, satellite), gated."""
    from .orbital import link_geometry

    table = {}
    for station in network.stations:
        per_sat = {}
        for spec in network.satellites:
            geom = link_geometry(snapshot, spec.id, station.id)
            if geom.elevation >= min_elevation:
                per_sat[spec.id] = geom
        table[station.id] = per_sat
    return table


@dataclass(frozen=True)
class NetworkSpec:
    satellites: tuple
    stations: tuple[GroundStation, ...]
    pairs: tuple[PairSpec, ...]

    def __post_init__(self) -> None:
        station_ids = {gs.id for gs in self.stations}
        if len(station_ids) != len(self.stations):
            raise ConfigurationError("duplicate station ids")
        sat_ids = {s.id for s in self.satellites}
        if len(sat_ids) != len(self.satellites):
            raise ConfigurationError("duplicate satellite ids")
        seen = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise ConfigurationError(f"duplicate pair id {pair.id}")
            seen.add(pair.id)
            for sid in (pair.station_a, pair.station_b):
                if sid not in station_ids:
                    raise ConfigurationError(
                        f"pair {pair.id}: unknown station {sid!r}"
                    )


def _weather_record(env, station_id, month, hour_utc):
    try:
        return env.lookup(station_id, month, hour_utc)
    except UnknownIdError as exc:
        raise IngestionError(
            f"station {station_id}: no weather records available"
        ) from exc


def _arm_for(geom, record, physics, irradiance) -> ArmChannel:
    fs = free_space_transmissivity(physics.optics, geom.slant_range)
    atm = effective_transmissivity(record, geom.elevation)
    eta = arm_transmissivity(
        fs, atm, physics.optics.tx_efficiency, physics.optics.rx_efficiency
    )
    dark = dark_click_prob(
        irradiance,
        physics.detector_gate,
        physics.filter_bandwidth_nm,
        physics.field_of_view,
        physics.optics.rx_radius,
        physics.optics.wavelength,
    )
    return ArmChannel(transmissivity=eta, dark_click_prob=dark)


def build_weights(
    snapshot: ConstellationSnapshot,
    network: NetworkSpec,
    physics: PhysicsParams,
    env: EnvironmentTable,
    min_elevation: float,
    fidelity_threshold: float,
    month: int = 6,
    hour_utc: float = 0.0,
) -> SlotInstance:
    """Direct-downlink rates for every satellite and station pair.

    A cell earns a nonzero rate only when the satellite clears the minimum
    elevation at both stations and the delivered fidelity clears the
    threshold; the computed fidelity is recorded either way for gated
    cells, with zeros where geometry already rules the link out.
    """
    sat_ids = tuple(s.id for s in network.satellites)
    station_ids = tuple(g.id for g in network.stations)
    pair_ids = tuple(p.id for p in network.pairs)
    gs_index = {sid: g for g, sid in enumerate(station_ids)}
    pair_stations = tuple(
        (gs_index[p.station_a], gs_index[p.station_b]) for p in network.pairs
    )

    links = _station_link_table(snapshot, network, min_elevation)

    n_sat, n_pair = len(sat_ids), len(pair_ids)
    omega = [[0.0] * n_pair for _ in range(n_sat)]
    fidelity = [[0.0] * n_pair for _ in range(n_sat)]
    sat_index = {sid: i for i, sid in enumerate(sat_ids)}
    records: dict[str, object] = {}
    arm_cache: dict[tuple[str, str], ArmChannel] = {}

    def weather(station_id):
        if station_id not in records:
            records[station_id] = _weather_record(env, station_id, month, hour_utc)
        return records[station_id]

    def arm(sat_id, station_id):
        key = (sat_id, station_id)
        if key not in arm_cache:
            geom = links[station_id][sat_id]
            record = weather(station_id)
            arm_cache[key] = _arm_for(geom, record, physics, record.solar_irradiance)
        return arm_cache[key]

    for j, pair in enumerate(network.pairs):
        visible_a = links[pair.station_a]
        visible_b = links[pair.station_b]
        for sat_id in visible_a.keys() & visible_b.keys():
            i = sat_index[sat_id]
            outcome = end_to_end_outcome(
                physics.source, arm(sat_id, pair.station_a), arm(sat_id, pair.station_b)
            )
            fidelity[i][j] = outcome.fidelity
            if outcome.fidelity >= fidelity_threshold:
                omega[i][j] = outcome.edr

    return SlotInstance(
        time=snapshot.time,
        sat_ids=sat_ids,
        station_ids=station_ids,
        pair_ids=pair_ids,
        pair_stations=pair_stations,
        omega=tuple(tuple(row) for row in omega),
        fidelity=tuple(tuple(row) for row in fidelity),
        nu=None,
        sat_caps=tuple(s.transmitter_cap for s in network.satellites),
        gs_caps=tuple(g.receiver_cap for g in network.stations),
        pair_caps=tuple(p.pair_cap for p in network.pairs),
        reflector_caps=tuple(s.reflector_cap for s in network.satellites),
    )


def build_reflection_weights(
    snapshot: ConstellationSnapshot,
    network: NetworkSpec,
    physics: PhysicsParams,
    env: EnvironmentTable,
    min_elevation: float,
    fidelity_threshold: float,
    mirror_efficiency: float,
    month: int = 6,
    hour_utc: float = 0.0,
) -> SlotInstance:
    """Direct rates plus two-satellite relayed rates.

    A relayed entry needs source visibility at the first station, relay
    visibility at the second, and a clear sight line between the two
    satellites; the source-to-relay hop is pure diffraction into the
    mirror aperture, scaled by the mirror efficiency, and the relay
    downlink reuses the standard optics so a co-located lossless relay
    reproduces the direct link exactly.
    """
    from .orbital import inter_satellite_distance, inter_satellite_visible

    if not 0.0 <= mirror_efficiency <= 1.0:
        raise ConfigurationError("mirror efficiency must lie in [0, 1]")
    base = build_weights(
        snapshot, network, physics, env, min_elevation, fidelity_threshold,
        month=month, hour_utc=hour_utc,
    )
    links = _station_link_table(snapshot, network, min_elevation)
    records: dict[str, object] = {}

    def weather(station_id):
        if station_id not in records:
            records[station_id] = _weather_record(env, station_id, month, hour_utc)
        return records[station_id]

    sat_index = {sid: i for i, sid in enumerate(base.sat_ids)}
    hop_optics = OpticsParams(
        tx_radius=physics.optics.tx_radius,
        rx_radius=physics.mirror_radius,
        wavelength=physics.optics.wavelength,
        tx_efficiency=1.0,
        rx_efficiency=1.0,
    )

    nu: dict[tuple[int, int, int], float] = {}
    for j, pair in enumerate(network.pairs):
        for src_id, geom_a in links[pair.station_a].items():
            i = sat_index[src_id]
            record_a = weather(pair.station_a)
            arm_a = _arm_for(geom_a, record_a, physics, record_a.solar_irradiance)
            for relay_id, geom_b in links[pair.station_b].items():
                k = sat_index[relay_id]
                if i == k:
                    continue
                if not inter_satellite_visible(snapshot, src_id, relay_id):
                    continue
                hop = inter_satellite_distance(snapshot, src_id, relay_id)
                hop_fs = free_space_transmissivity(hop_optics, hop) if hop > 0 else 1.0
                record_b = weather(pair.station_b)
                relay_arm = _arm_for(geom_b, record_b, physics, record_b.solar_irradiance)
                arm1, arm2 = reflection_arms(arm_a, hop_fs, mirror_efficiency, relay_arm)
                outcome = end_to_end_outcome(physics.source, arm1, arm2)
                if outcome.fidelity >= fidelity_threshold and outcome.edr > 0:
                    nu[(i, k, j)] = outcome.edr
    return replace(base, nu=nu)


# ---------------------------------------------------------------------------
# generic MIP assembly


def _variable_upper(instance, i, j, k=None):
    a, b = instance.pair_stations[j]
    cap = min(
        instance.sat_caps[i],
        instance.pair_caps[j],
        instance.gs_caps[a],
        instance.gs_caps[b],
    )
    if k is not None:
        cap = min(cap, instance.reflector_caps[k])
    return max(0, cap)


def _solve_assignment(
    instance: SlotInstance,
    x_weights,
    y_weights: dict[tuple[int, int, int], float],
    objective_x,
    objective_y,
    extra_vars=0,
    extra_objective=(),
    extra_constraints=(),
    extra_bounds=(),
):
    """Shared MIP scaffold over support variables.

    Variables are the positive-weight x cells, then the positive-weight y
    triples, then any extras (continuous).  Returns the solver result with
    the variable maps so callers can rebuild the allocation.
    """
    x_vars = [
        (i, j)
        for i in range(instance.num_sats)
        for j in range(instance.num_pairs)
        if x_weights[i][j] > 0 and _variable_upper(instance, i, j) > 0
    ]
    y_vars = [
        key
        for key in sorted(y_weights)
        if y_weights[key] > 0 and _variable_upper(instance, key[0], key[2], key[1]) > 0
    ]
    nx, ny = len(x_vars), len(y_vars)
    n = nx + ny + extra_vars
    if nx + ny == 0:
        return None, x_vars, y_vars

    objective = [0.0] * n
    for idx, (i, j) in enumerate(x_vars):
        objective[idx] = objective_x[i][j]
    for idx, key in enumerate(y_vars):
        objective[nx + idx] = objective_y[key]
    for offset, value in enumerate(extra_objective):
        objective[nx + ny + offset] = value

    constraints = []
    # transmitter cap: direct service plus the source role of relayed links
    for i in range(instance.num_sats):
        row = [0.0] * n
        involved = False
        for idx, (vi, _) in enumerate(x_vars):
            if vi == i:
                row[idx] = 1.0
                involved = True
        for idx, (vi, _, _) in enumerate(y_vars):
            if vi == i:
                row[nx + idx] = 1.0
                involved = True
        if involved:
            constraints.append((tuple(row), "<=", float(instance.sat_caps[i])))
    # receiver cap: every connection of an incident pair occupies a receiver
    for g in range(len(instance.station_ids)):
        row = [0.0] * n
        involved = False
        incident = set(instance.pairs_at_station(g))
        for idx, (_, vj) in enumerate(x_vars):
            if vj in incident:
                row[idx] = 1.0
                involved = True
        for idx, (_, _, vj) in enumerate(y_vars):
            if vj in incident:
                row[nx + idx] = 1.0
                involved = True
        if involved:
            constraints.append((tuple(row), "<=", float(instance.gs_caps[g])))
    # pair cap over both connection kinds
    for j in range(instance.num_pairs):
        row = [0.0] * n
        involved = False
        for idx, (_, vj) in enumerate(x_vars):
            if vj == j:
                row[idx] = 1.0
                involved = True
        for idx, (_, _, vj) in enumerate(y_vars):
            if vj == j:
                row[nx + idx] = 1.0
                involved = True
        if involved:
            constraints.append((tuple(row), "<=", float(instance.pair_caps[j])))
    # reflector cap
    if y_vars:
        for k in range(instance.num_sats):
            row = [0.0] * n
            involved = False
            for idx, (_, vk, _) in enumerate(y_vars):
                if vk == k:
                    row[nx + idx] = 1.0
                    involved = True
            if involved:
                constraints.append(
                    (tuple(row), "<=", float(instance.reflector_caps[k]))
                )
    constraints.extend(extra_constraints)

    bounds = []
    for i, j in x_vars:
        bounds.append((0.0, float(_variable_upper(instance, i, j))))
    for i, k, j in y_vars:
        bounds.append((0.0, float(_variable_upper(instance, i, j, k))))
    bounds.extend(extra_bounds)

    mip = MipProblem(
        base=LinearProgram(
            objective=tuple(objective),
            constraints=tuple(constraints),
            variable_bounds=tuple(bounds),
        ),
        integer_vars=tuple(range(nx + ny)),
    )
    result = solve_mip(mip)
    if result.status not in (OPTIMAL, GAP_LIMIT) or result.assignment is None:
        raise StructuralError(f"assignment solve returned {result.status}")
    return result, x_vars, y_vars


def _allocation_from(instance, result, x_vars, y_vars) -> Allocation:
    x = [[0] * instance.num_pairs for _ in range(instance.num_sats)]
    y = []
    if result is not None:
        for idx, (i, j) in enumerate(x_vars):
            count = int(round(result.assignment[idx]))
            if count:
                x[i][j] = count
        for idx, (i, k, j) in enumerate(y_vars):
            count = int(round(result.assignment[len(x_vars) + idx]))
            if count:
                y.append((i, k, j, count))
    objective = float(
        sum(
            instance.omega[i][j] * x[i][j]
            for i in range(instance.num_sats)
            for j in range(instance.num_pairs)
        )
    )
    if instance.nu:
        objective += sum(instance.nu[(i, k, j)] * c for i, k, j, c in y)
    return Allocation(
        x=tuple(tuple(row) for row in x), y=tuple(sorted(y)), objective=objective
    )


# ---------------------------------------------------------------------------
# policies


def solve_primary_ratesum(instance: SlotInstance) -> Allocation:
    """Maximize aggregate direct rate under the capacity caps."""
    empty: dict[tuple[int, int, int], float] = {}
    result, x_vars, y_vars = _solve_assignment(
        instance, instance.omega, empty, instance.omega, empty
    )
    return _allocation_from(instance, result, x_vars, y_vars)


def solve_reflection_ratesum(instance: SlotInstance) -> Allocation:
    """Maximize aggregate rate over direct and relayed connections."""
    nu = instance.nu or {}
    result, x_vars, y_vars = _solve_assignment(
        instance, instance.omega, nu, instance.omega, nu
    )
    return _allocation_from(instance, result, x_vars, y_vars)


def solve_one_shot_maxmin(
    instance: SlotInstance,
    f,
    f_reflection: dict[tuple[int, int, int], float] | None = None,
) -> tuple[Allocation, float]:
    """Maximize the worst pair's weighted rate in a single solve.

    Adds one continuous variable for the floor; pairs whose weights are
    all zero are left out of the floor constraints, since they could only
    pin it at zero.  A second solve with the floor fixed picks the
    highest-total solution among the max-min optima, which keeps results
    deterministic and avoids gratuitously idle resources.
    """
    fy = f_reflection or {}
    active = {
        j
        for i in range(instance.num_sats)
        for j in range(instance.num_pairs)
        if f[i][j] > 0
    }
    active.update(j for (_, _, j), value in fy.items() if value > 0)
    if not active:
        return zero_allocation(instance), 0.0

    def floor_rows(x_vars, y_vars, lam_index, n):
        rows = []
        for j in sorted(active):
            row = [0.0] * n
            for idx, (vi, vj) in enumerate(x_vars):
                if vj == j:
                    row[idx] = f[vi][vj]
            for idx, key in enumerate(y_vars):
                if key[2] == j:
                    row[len(x_vars) + idx] = fy[key]
            row[lam_index] = -1.0
            rows.append((tuple(row), ">=", 0.0))
        return rows

    # both solves share the variable layout, so build it once via a probe
    probe_x = [
        (i, j)
        for i in range(instance.num_sats)
        for j in range(instance.num_pairs)
        if f[i][j] > 0 and _variable_upper(instance, i, j) > 0
    ]
    probe_y = [
        key
        for key in sorted(fy)
        if fy[key] > 0 and _variable_upper(instance, key[0], key[2], key[1]) > 0
    ]
    n_total = len(probe_x) + len(probe_y) + 1
    lam_index = n_total - 1
    rows = floor_rows(probe_x, probe_y, lam_index, n_total)

    stage1, x_vars, y_vars = _solve_assignment(
        instance,
        f,
        fy,
        [[0.0] * instance.num_pairs for _ in range(instance.num_sats)],
        {key: 0.0 for key in fy},
        extra_vars=1,
        extra_objective=(1.0,),
        extra_constraints=rows,
        extra_bounds=((0.0, None),),
    )
    if stage1 is None:
        return zero_allocation(instance), 0.0
    lam_star = stage1.assignment[lam_index]

    stage2, x_vars, y_vars = _solve_assignment(
        instance,
        f,
        fy,
        f,
        fy,
        extra_vars=1,
        extra_objective=(0.0,),
        extra_constraints=rows,
        extra_bounds=((max(0.0, lam_star - LAMBDA_SLACK), None),),
    )
    allocation = _allocation_from(instance, stage2, x_vars, y_vars)
    achieved = min(
        _pair_weighted_rate(instance, allocation, f, fy, j) for j in sorted(active)
    )
    return allocation, achieved


def _pair_weighted_rate(instance, allocation, f, fy, j) -> float:
    total = sum(
        f[i][j] * allocation.x[i][j] for i in range(instance.num_sats)
    )
    for (vi, vk, vj, count) in allocation.y:
        if vj == j:
            total += fy[(vi, vk, vj)] * count
    return total


def uncontended_max_edr(
    instance: SlotInstance, pair, include_reflection: bool | None = None
) -> float:
    """Best rate a single pair could get with the whole network to itself."""
    if isinstance(pair, str):
        pair = instance.pair_ids.index(pair)
    if not 0 <= pair < instance.num_pairs:
        raise ConfigurationError(f"pair index {pair} out of range")
    if include_reflection is None:
        include_reflection = instance.nu is not None
    masked = tuple(
        tuple(row[j] if j == pair else 0.0 for j in range(instance.num_pairs))
        for row in instance.omega
    )
    nu = {}
    if include_reflection and instance.nu:
        nu = {key: v for key, v in instance.nu.items() if key[2] == pair}
    result, x_vars, y_vars = _solve_assignment(instance, masked, nu, masked, nu)
    if result is None:
        return 0.0
    return _allocation_from(instance, result, x_vars, y_vars).objective


def fractional_weights(omega, a_values):
    """Normalize each pair's rates by its uncontended best, zeros when dead."""
    rows = []
    for row in omega:
        rows.append(
            tuple(
                (value / a_values[j]) if a_values[j] > 0 else 0.0
                for j, value in enumerate(row)
            )
        )
    return tuple(rows)


def _ratefair(instance: SlotInstance, use_reflection: bool) -> Allocation:
    a_values = [
        uncontended_max_edr(instance, j, include_reflection=use_reflection)
        for j in range(instance.num_pairs)
    ]
    fx = fractional_weights(instance.omega, a_values)
    fy_all: dict[tuple[int, int, int], float] = {}
    if use_reflection and instance.nu:
        for (i, k, j), value in instance.nu.items():
            if a_values[j] > 0:
                fy_all[(i, k, j)] = value / a_values[j]

    remaining = {j for j in range(instance.num_pairs) if a_values[j] > 0}
    caps_t = list(instance.sat_caps)
    caps_r = list(instance.gs_caps)
    caps_u = list(instance.reflector_caps)
    frozen_x = [[0] * instance.num_pairs for _ in range(instance.num_sats)]
    frozen_y: dict[tuple[int, int, int], int] = {}

    while remaining:
        # clamping pair caps to the shrunken receiver pools keeps the
        # receiver-dominance invariant valid on every residual instance
        residual_pair_caps = tuple(
            min(instance.pair_caps[j], caps_r[a], caps_r[b]) if j in remaining else 0
            for j, (a, b) in enumerate(instance.pair_stations)
        )
        residual = replace(
            instance,
            sat_caps=tuple(caps_t),
            gs_caps=tuple(caps_r),
            pair_caps=residual_pair_caps,
            reflector_caps=tuple(caps_u),
        )
        fx_live = tuple(
            tuple(v if j in remaining else 0.0 for j, v in enumerate(row))
            for row in fx
        )
        fy_live = {key: v for key, v in fy_all.items() if key[2] in remaining}
        allocation, _ = solve_one_shot_maxmin(residual, fx_live, fy_live)
        achieved = {
            j: _pair_weighted_rate(residual, allocation, fx_live, fy_live, j)
            for j in remaining
        }
        floor = min(achieved.values())
        tol = floor * SATURATION_REL_TOL + 1e-12
        saturated = sorted(j for j in remaining if achieved[j] <= floor + tol)
        for j in saturated:
            a, b = instance.pair_stations[j]
            for i in range(instance.num_sats):
                count = allocation.x[i][j]
                if count:
                    frozen_x[i][j] += count
                    caps_t[i] -= count
                    caps_r[a] -= count
                    caps_r[b] -= count
            for (vi, vk, vj, count) in allocation.y:
                if vj == j:
                    frozen_y[(vi, vk, vj)] = frozen_y.get((vi, vk, vj), 0) + count
                    caps_t[vi] -= count
                    caps_u[vk] -= count
                    caps_r[a] -= count
                    caps_r[b] -= count
            remaining.discard(j)

    objective = float(
        sum(
            instance.omega[i][j] * frozen_x[i][j]
            for i in range(instance.num_sats)
            for j in range(instance.num_pairs)
        )
    )
    y_items = []
    for (i, k, j), count in frozen_y.items():
        objective += (instance.nu or {})[(i, k, j)] * count
        y_items.append((i, k, j, count))
    return Allocation(
        x=tuple(tuple(row) for row in frozen_x),
        y=tuple(sorted(y_items)),
        objective=objective,
    )


def solve_primary_ratefair(instance: SlotInstance) -> Allocation:
    """Iterative max-min over contention-normalized direct rates.

    Each round maximizes the worst pair's fractional rate, pins the pairs
    that sit at that floor, charges their consumption against the caps,
    and repeats on the rest.
    """
    return _ratefair(instance, use_reflection=False)


def solve_reflection_ratefair(instance: SlotInstance) -> Allocation:
    return _ratefair(instance, use_reflection=True)


# ---------------------------------------------------------------------------
# unit-capacity reductions


def solve_stsr(instance: SlotInstance) -> Allocation:
    """Single-transmitter, single-receiver case via independent sets.

    With every cap at one, feasible allocations are exactly independent
    sets of the conflict graph whose vertices are positive-rate cells and
    whose edges join cells sharing a satellite or a station.
    """
    if any(c != 1 for c in instance.sat_caps) or any(
        c != 1 for c in instance.gs_caps
    ) or any(c != 1 for c in instance.pair_caps):
        raise ModeError("unit caps required for the independent-set reduction")
    vertices = [
        (i, j)
        for i in range(instance.num_sats)
        for j in range(instance.num_pairs)
        if instance.omega[i][j] > 0
    ]
    weights = [instance.omega[i][j] for i, j in vertices]
    edges = []
    for u in range(len(vertices)):
        iu, ju = vertices[u]
        su = set(instance.pair_stations[ju])
        for v in range(u + 1, len(vertices)):
            iv, jv = vertices[v]
            if iu == iv or su & set(instance.pair_stations[jv]):
                edges.append((u, v))
    try:
        selected, _ = mwis_exact(weights, edges)
    except SizeLimitError:
        return solve_primary_ratesum(instance)
    x = [[0] * instance.num_pairs for _ in range(instance.num_sats)]
    for v in selected:
        i, j = vertices[v]
        x[i][j] = 1
    objective = float(
        sum(instance.omega[i][j] for i, j in (vertices[v] for v in selected))
    )
    return Allocation(x=tuple(tuple(r) for r in x), y=(), objective=objective)


def solve_stmr(instance: SlotInstance) -> Allocation:
    """Matching reduction for instances whose receivers never bind.

    Satellites expand into one row per transmitter and pairs into one
    column per allowed connection, then a maximum-weight matching gives
    the optimal integral assignment directly.
    """
    total_tx = sum(instance.sat_caps)
    for g in range(len(instance.station_ids)):
        incident_cap = sum(instance.pair_caps[j] for j in instance.pairs_at_station(g))
        if instance.gs_caps[g] < min(total_tx, incident_cap):
            raise ModeError(
                f"station {instance.station_ids[g]}: receiver cap may bind; "
                "the matching reduction needs non-binding receivers"
            )
    rows = []
    for i in range(instance.num_sats):
        if any(instance.omega[i][j] > 0 for j in range(instance.num_pairs)):
            rows.extend((i,) * instance.sat_caps[i])
    cols = []
    for j in range(instance.num_pairs):
        if any(instance.omega[i][j] > 0 for i in range(instance.num_sats)):
            cols.extend((j,) * instance.pair_caps[j])
    weights = [
        [
            instance.omega[i][j] if instance.omega[i][j] > 0 else -math.inf
            for j in cols
        ]
        for i in rows
    ]
    matching, objective = hungarian(weights)
    x = [[0] * instance.num_pairs for _ in range(instance.num_sats)]
    for r, c in matching.items():
        x[rows[r]][cols[c]] += 1
    return Allocation(x=tuple(tuple(r) for r in x), y=(), objective=objective)


# ---------------------------------------------------------------------------
# verification and serialization


def allocation_violations(instance: SlotInstance, allocation: Allocation) -> list[str]:
    """Independent integer-arithmetic feasibility check."""
    messages = []
    if len(allocation.x) != instance.num_sats or any(
        len(row) != instance.num_pairs for row in allocation.x
    ):
        return ["allocation shape does not match the instance"]
    for row in allocation.x:
        for value in row:
            if value < 0 or value != int(value):
                messages.append(f"direct count {value} is not a nonnegative integer")
    source_load = [0] * instance.num_sats
    relay_load = [0] * instance.num_sats
    pair_load = [0] * instance.num_pairs
    for i in range(instance.num_sats):
        for j in range(instance.num_pairs):
            source_load[i] += allocation.x[i][j]
            pair_load[j] += allocation.x[i][j]
    for (i, k, j, count) in allocation.y:
        if count < 0 or count != int(count):
            messages.append(f"relay count {count} is not a nonnegative integer")
        if i == k:
            messages.append(f"self-relay allocation on satellite {i}")
        source_load[i] += count
        relay_load[k] += count
        pair_load[j] += count
    for i in range(instance.num_sats):
        if source_load[i] > instance.sat_caps[i]:
            messages.append(
                f"satellite {instance.sat_ids[i]}: {source_load[i]} transmissions "
                f"exceed cap {instance.sat_caps[i]}"
            )
        if relay_load[i] > instance.reflector_caps[i]:
            messages.append(
                f"satellite {instance.sat_ids[i]}: {relay_load[i]} reflections "
                f"exceed cap {instance.reflector_caps[i]}"
            )
    for g in range(len(instance.station_ids)):
        load = sum(pair_load[j] for j in instance.pairs_at_station(g))
        if load > instance.gs_caps[g]:
            messages.append(
                f"station {instance.station_ids[g]}: {load} connections exceed "
                f"cap {instance.gs_caps[g]}"
            )
    for j in range(instance.num_pairs):
        if pair_load[j] > instance.pair_caps[j]:
            messages.append(
                f"pair {instance.pair_ids[j]}: {pair_load[j]} connections exceed "
                f"cap {instance.pair_caps[j]}"
            )
    expected = sum(
        instance.omega[i][j] * allocation.x[i][j]
        for i in range(instance.num_sats)
        for j in range(instance.num_pairs)
    ) + sum((instance.nu or {}).get((i, k, j), 0.0) * c for i, k, j, c in allocation.y)
    if abs(expected - allocation.objective) > 1e-6 * max(1.0, abs(expected)):
        messages.append(
            f"objective {allocation.objective} differs from recomputed {expected}"
        )
    return messages


def pair_edr(instance: SlotInstance, allocation: Allocation) -> dict[str, float]:
    totals = {pid: 0.0 for pid in instance.pair_ids}
    for i in range(instance.num_sats):
        for j in range(instance.num_pairs):
            if allocation.x[i][j]:
                totals[instance.pair_ids[j]] += (
                    instance.omega[i][j] * allocation.x[i][j]
                )
    for (i, k, j, count) in allocation.y:
        totals[instance.pair_ids[j]] += (instance.nu or {})[(i, k, j)] * count
    return totals


def allocation_to_json(
    instance: SlotInstance, allocation: Allocation, policy: str
) -> dict:
    """JSON-ready form; the relay tensor is emitted dense only when used."""
    y_tensor: list = []
    if allocation.y:
        y_tensor = [
            [[0] * instance.num_pairs for _ in range(instance.num_sats)]
            for _ in range(instance.num_sats)
        ]
        for (i, k, j, count) in allocation.y:
            y_tensor[i][k][j] = count
    return {
        "t": instance.time,
        "policy": policy,
        "x": [list(row) for row in allocation.x],
        "y": y_tensor,
        "objective": allocation.objective,
        "per_pair_edr": pair_edr(instance, allocation),
    }
