"""JSON schemas for structured provider responses.

Every role that must answer in JSON has a named schema here; completion
requests carry the name and the gateway resolves it when extracting the
document from the raw response text.
"""

from __future__ import annotations

from .script_model import load_script_schema

_CRITERIA = [
    "scientific_soundness",
    "implementation_difficulty",
    "conditions_controllability",
    "risk_robustness",
    "requirement_alignment",
    "ethics_compliance",
]

_LEVEL = {"type": ["string", "number"]}

GOAL_SECTION = {
    "type": "object",
    "required": ["statement"],
    "properties": {
        "statement": {"type": "string", "minLength": 1},
        "success_criteria": {"type": "array", "items": {"type": "string"}},
    },
}

FACTORS_SECTION = {
    "type": "object",
    "required": ["factors", "responses"],
    "properties": {
        "factors": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "levels"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "description": {"type": "string"},
                    "levels": {"type": "array", "minItems": 2, "items": _LEVEL},
                    "unit": {"type": ["string", "null"]},
                },
            },
        },
        "responses": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "kind"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "description": {"type": "string"},
                    "kind": {"enum": ["scalar", "probability_vector", "categorical"]},
                    "categories": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}

DESIGN_POINTS_SECTION = {
    "type": "object",
    "required": ["design_points"],
    "properties": {
        "design_points": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "assignments"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "assignments": {"type": "object", "additionalProperties": _LEVEL},
                },
            },
        },
    },
}

REVIEW_VERDICT = {
    "type": "object",
    "required": ["passed"],
    "properties": {
        "passed": {"type": "boolean"},
        "feedback": {"type": "string"},
    },
}

CHIEF_SCORES = {
    "type": "object",
    "required": ["scores", "rationales"],
    "properties": {
        "scores": {
            "type": "object",
            "required": _CRITERIA,
            "properties": {
                **{c: {"type": "number", "minimum": 0, "maximum": 100} for c in _CRITERIA},
                "ethics_compliance": {"enum": [0, 100]},
            },
        },
        "rationales": {
            "type": "object",
            "required": _CRITERIA,
            "additionalProperties": {"type": "string"},
        },
    },
}

CAST_DOCUMENT = {
    "type": "object",
    "required": ["actors", "edges"],
    "properties": {
        "actors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "name", "identity", "goals"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "name": {"type": "string", "minLength": 1},
                    "identity": {"type": "string", "minLength": 1},
                    "description": {"type": "string"},
                    "influence_factors": {"type": "array", "items": {"type": "string"}},
                    "knowledge": {"type": "array", "items": {"type": "string"}},
                    "goals": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b"],
                "properties": {
                    "a": {"type": "string"},
                    "b": {"type": "string"},
                    "label": {"type": "string"},
                },
            },
        },
    },
}

PROBABILITY_WEIGHTS = {
    "type": "object",
    "required": ["weights"],
    "properties": {
        "weights": {"type": "array", "minItems": 2, "items": {"type": "number"}},
    },
}

SCALAR_SCORE = {
    "type": "object",
    "required": ["score"],
    "properties": {"score": {"type": "number"}},
}

OUTCOME = {
    "type": "object",
    "required": ["label", "category"],
    "properties": {
        "label": {"type": "string", "minLength": 1},
        "category": {"enum": ["peace", "limited_conflict", "conventional_war", "nuclear_war"]},
    },
}

SIMILARITY_SCORE = {
    "type": "object",
    "required": ["score"],
    "properties": {
        "score": {"type": "number"},
        "rationale": {"type": "string"},
    },
}

EMBEDDING_VECTOR = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "number"},
}

_REGISTRY: dict[str, dict] = {
    "goal_section": GOAL_SECTION,
    "factors_section": FACTORS_SECTION,
    "design_points_section": DESIGN_POINTS_SECTION,
    "review_verdict": REVIEW_VERDICT,
    "chief_scores": CHIEF_SCORES,
    "cast_document": CAST_DOCUMENT,
    "probability_weights": PROBABILITY_WEIGHTS,
    "scalar_score": SCALAR_SCORE,
    "outcome": OUTCOME,
    "similarity_score": SIMILARITY_SCORE,
    "embedding_vector": EMBEDDING_VECTOR,
}


def get_schema(name: str) -> dict:
    if name == "script_document":
        return load_script_schema()
    return _REGISTRY[name]

