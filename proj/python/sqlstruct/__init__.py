from ._sqlstruct import (
    Error,
    canonicalize,
    compile_ir,
    exec_metrics,
    execute,
    family_robustness,
    key_digest,
    load_spider,
    normalize_text,
    pipeline_rates,
    pipeline_record,
    prompt_template,
    structure_metrics,
    validate_ir,
)

__version__ = "0.1.0"


def canonical_key(sql):
    r = canonicalize(sql)
    return r["key"] if r["ok"] else None
