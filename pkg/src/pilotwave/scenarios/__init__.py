"""Catalog of end-to-end scenarios with their parameter schemas."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..propagator import BACKENDS
from . import (box_release, double_slit, free_gaussian, hygiene, identical, measurement_runs,
               stationary, structural)
from ..measurement import PRESETS as MEASUREMENT_PRESETS


@dataclass(frozen=True)
class Scenario:
    id: str
    run: Callable
    defaults: dict
    claim: str
    criteria: tuple
    # keys whose value may be zero or negative, or that need a hand-written schema
    special: dict

    def schema(self) -> dict:
        props = {}
        for key, value in self.defaults.items():
            props[key] = self.special.get(key, _infer(value))
        return {"type": "object", "properties": props, "additionalProperties": False}

    def describe(self) -> dict:
        return {"id": self.id, "claim": self.claim, "criteria": list(self.criteria),
                "defaults": self.defaults, "schema": self.schema()}


def _infer(value) -> dict:
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer", "exclusiveMinimum": 0}
    if isinstance(value, float):
        return {"type": "number", "exclusiveMinimum": 0}
    if isinstance(value, str):
        return {"type": "string"}
    if isinstance(value, list):
        return {"type": "array"}
    return {}


REAL = {"type": "number"}
AMPLITUDE = {"anyOf": [{"type": "number"}, {"type": "string"},
                       {"type": "array", "items": {"type": "number"}, "minItems": 2,
                        "maxItems": 2}]}
PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
SLIT_SPECIAL = {"x0": REAL, "k0": REAL, "barrier_x": REAL, "screen_x": REAL, "window": PAIR}

CATALOG = {s.id: s for s in (
    Scenario("free_gaussian", free_gaussian.run, free_gaussian.DEFAULTS,
             "Free Gaussian trajectories scale as x0 sigma(t)/sigma0 and stay |psi|^2 distributed",
             ("AC1", "AC7", "AC10"), {}),
    Scenario("box_release", box_release.run, box_release.DEFAULTS,
             "A held box eigenstate is static; once released each particle moves at +-hbar k/m "
             "with the sign set by its side of the centre, each side with probability 1/2",
             ("AC1", "AC3", "AC10"), {}),
    Scenario("double_slit", double_slit.run, double_slit.DEFAULTS,
             "Particles through the upper slit land in the upper half; screen statistics follow |psi|^2",
             ("AC1", "AC4", "AC10"), SLIT_SPECIAL),
    Scenario("double_slit_which_way", double_slit.which_way, double_slit.WHICH_WAY_DEFAULTS,
             "A pointer recording the slit passed removes the interference fringes",
             ("AC4",), SLIT_SPECIAL),
    Scenario("stationary_real_state", stationary.run, stationary.DEFAULTS,
             "Real eigenstates have zero velocity everywhere, so particles stand still",
             ("AC6", "AC10"), {"preset": {"enum": list(stationary.PRESETS)}}),
    Scenario("identical_particles", identical.run, identical.DEFAULTS,
             "Guidance is invariant under label permutation; antisymmetric pairs never meet",
             ("AC1", "AC9", "AC10"),
             {"symmetry": {"enum": list(identical.SYMMETRIES)}, "momentum": REAL,
              "node_guard": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}}),
    Scenario("born_rule", measurement_runs.born_rule, measurement_runs.BORN_DEFAULTS,
             "A calibrated measurement yields outcome i with frequency |c_i|^2",
             ("AC2", "AC10"),
             {"preset": {"enum": list(MEASUREMENT_PRESETS)},
              "amplitudes": {"type": "array", "minItems": 1,
                             "items": {"type": "array", "items": AMPLITUDE, "minItems": 2,
                                       "maxItems": 2}}}),
    Scenario("effective_collapse", measurement_runs.effective_collapse,
             measurement_runs.COLLAPSE_DEFAULTS,
             "After separation the conditional wave function is the occupied branch and the empty "
             "branch has no influence",
             ("AC5",), {"preset": {"enum": list(MEASUREMENT_PRESETS)}, "c1": AMPLITUDE,
                        "c2": AMPLITUDE}),
    Scenario("subspace_measurement", measurement_runs.subspace_measurement,
             measurement_runs.SUBSPACE_DEFAULTS,
             "A state prepared inside one outcome subspace gives that outcome in every trial",
             ("AC2", "AC10"), {"preset": {"enum": list(MEASUREMENT_PRESETS)}}),
    Scenario("solver_hygiene", hygiene.run, hygiene.DEFAULTS,
             "Propagators conserve norm and reverse cleanly; the finite-difference scheme "
             "converges at second order",
             ("AC7", "AC8"),
             {"center": REAL, "momentum": REAL,
              "continuity_levels": {"type": "array", "minItems": 2,
                                    "items": {"type": "array", "items": {"type": "number",
                                              "exclusiveMinimum": 0},
                                              "minItems": 2, "maxItems": 2}},
              "backends": {"type": "array", "minItems": 1,
                           "items": {"enum": list(BACKENDS)}}}),
    Scenario("structural_invariants", structural.run, structural.DEFAULTS,
             "Velocity is unchanged by psi -> c psi or by a global spin rotation; "
             "relabelling permutes it and 1D trajectories never cross",
             ("AC9",), {}),
)}


def get(scenario_id: str) -> Scenario:
    try:
        return CATALOG[scenario_id]
    except KeyError:
        raise KeyError(f"unknown scenario {scenario_id!r}; choose from {sorted(CATALOG)}") from None
