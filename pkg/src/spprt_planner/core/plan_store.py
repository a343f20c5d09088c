"""
Plan file persistence.

A plan file is a JSON document holding the configuration echo, K_eff, m1, z*
and one payload per allowance level (interval, grid step, nodes and values).
Floats are written in shortest round-trip form, so loading reproduces every
number bit for bit.
"""

import json
import logging
import os
from typing import Any, Dict

from ..design.engine import Plan
from ..design.envelope import Envelope, make_envelope
from ..types.errors import ConfigurationError, DomainError, PlanFileError
from .config_manager import ConfigManager
from .reports import atomic_write_text

SCHEMA_VERSION = 1

logger = logging.getLogger(__name__)


def plan_to_document(plan: Plan) -> Dict[str, Any]:
    levels = []
    for j in range(1, plan.k_eff):
        env = plan.envelopes[j]
        levels.append({
            "allowance": j,
            "interval": [env.interval[0], env.interval[1]],
            "h": env.h,
            "nodeCount": int(env.nodes.size),
            "nodes": env.nodes.tolist(),
            "values": env.values.tolist(),
        })
    return {
        "schemaVersion": SCHEMA_VERSION,
        "config": plan.config.to_dict(),
        "K_eff": plan.k_eff,
        "m1": plan.m1,
        "zStar": plan.z_star,
        "earlyExit": plan.early_exit,
        "earlyExitLevel": plan.early_exit_level,
        "levels": levels,
    }


def plan_from_document(document: Dict[str, Any]) -> Plan:
    if not isinstance(document, dict):
        raise PlanFileError("Plan file must contain an object")
    version = document.get("schemaVersion")
    if version != SCHEMA_VERSION:
        raise PlanFileError(
            f"Unsupported plan schemaVersion {version!r} (expected {SCHEMA_VERSION})"
        )
    try:
        config = ConfigManager()
        config.load_document(document["config"])
        design = config.get_design_config()

        k_eff = int(document["K_eff"])
        envelopes = [Envelope.stop_risk_only(design.params)]
        levels = sorted(document["levels"], key=lambda level: level["allowance"])
        if [level["allowance"] for level in levels] != list(range(1, k_eff)):
            raise PlanFileError("Plan levels do not cover allowances 1..K_eff-1")
        for level in levels:
            nodes, values = level["nodes"], level["values"]
            if len(nodes) != level["nodeCount"]:
                raise PlanFileError(f"Node count mismatch at allowance {level['allowance']}")
            envelopes.append(make_envelope(design.params, level["interval"], nodes, values, level["h"]))

        return Plan(
            config=design,
            k_eff=k_eff,
            envelopes=tuple(envelopes),
            m1=int(document["m1"]),
            early_exit_level=document.get("earlyExitLevel"),
        )
    except (KeyError, TypeError, ValueError, ConfigurationError, DomainError) as e:
        raise PlanFileError(f"Malformed plan file: {e}")


def save_plan(plan: Plan, path: str) -> str:
    atomic_write_text(path, json.dumps(plan_to_document(plan), indent=2) + "\n")
    logger.info(f"Saved plan to {path}")
    return path


def load_plan(path: str) -> Plan:
    if not os.path.exists(path):
        raise PlanFileError(f"Plan file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise PlanFileError(f"Cannot read plan file {path}: {e}")
    return plan_from_document(document)
