"""JSON Schemas for the versioned output documents.

Report documents carry a "schema" tag (symvalic-result/1,
symvalic-warnings/1, symvalic-facts/1); these definitions pin the shape
each tag promises.
"""

_DEPS_PROPS = {
    "local": {"type": "object", "additionalProperties": {"type": "string"}},
    "tx": {"type": "object", "additionalProperties": {"type": "string"}},
}

_VALUE_ROW = {
    "type": "object",
    "required": ["value", "local", "tx"],
    "properties": {"value": {"type": "string"}, **_DEPS_PROPS},
}

RESULT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema", "contract", "truncated", "config", "inferences",
                 "reachability", "externalCalls", "returns", "storage"],
    "properties": {
        "schema": {"const": "symvalic-result/1"},
        "contract": {"type": "string"},
        "truncated": {"type": "boolean"},
        "config": {
            "type": "object",
            "required": ["depArgs", "depStorageLoads", "depTxArgs",
                         "arithDepth", "txRounds", "seed"],
            "additionalProperties": {"type": "integer"},
        },
        "inferences": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["function", "var", "value", "local", "tx"],
                "properties": {
                    "function": {"type": "string"},
                    "var": {"type": "string"},
                    "value": {"type": "string"},
                    **_DEPS_PROPS,
                },
            },
        },
        "reachability": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["function", "stmt", "local", "tx"],
                "properties": {
                    "function": {"type": "string"},
                    "stmt": {"type": "integer"},
                    **_DEPS_PROPS,
                },
            },
        },
        "externalCalls": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["stmt", "function", "callee", "kind", "target",
                             "args"],
                "properties": {
                    "stmt": {"type": "integer"},
                    "function": {"type": "string"},
                    "callee": {"type": "string"},
                    "kind": {"enum": ["external", "intrinsic"]},
                    "target": {"type": "array", "items": _VALUE_ROW},
                    "args": {"type": "array",
                             "items": {"type": "array", "items": _VALUE_ROW}},
                },
            },
        },
        "returns": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": _VALUE_ROW},
        },
        "storage": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["address", "value", "depth"],
                "properties": {
                    "address": {"type": "string"},
                    "value": {"type": "string"},
                    "depth": {"type": "integer"},
                },
            },
        },
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

WARNINGS_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema", "warnings"],
    "properties": {
        "schema": {"const": "symvalic-warnings/1"},
        "warnings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "contract", "function", "stmt",
                             "witness", "explanation"],
                "properties": {
                    "kind": {"enum": ["UNGUARDED_SENSITIVE",
                                      "TAINTED_SENSITIVE_ARG", "REENTRANCY",
                                      "UNTRUSTED_REACHABILITY",
                                      "CORPUS_ANOMALY"]},
                    "contract": {"type": "string"},
                    "function": {"type": "string"},
                    "stmt": {"type": "integer"},
                    "witness": {"type": "string"},
                    "explanation": {"type": "string"},
                },
            },
        },
    },
}

FACTS_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema", "round", "thresholds", "sensitiveArgs",
                 "usuallyGuarded", "reentrancyAllowing"],
    "properties": {
        "schema": {"const": "symvalic-facts/1"},
        "round": {"type": "integer", "minimum": 1},
        "thresholds": {
            "type": "object",
            "required": ["minSamples", "untaintedFraction", "guardedFraction"],
        },
        "sensitiveArgs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["signature", "position", "taintedCount",
                             "untaintedCount", "fraction", "samples"],
            },
        },
        "usuallyGuarded": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["signature", "guardedCallers",
                             "unguardedCallers", "fraction", "samples"],
            },
        },
        "reentrancyAllowing": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["signature", "votes"],
            },
        },
    },
}
