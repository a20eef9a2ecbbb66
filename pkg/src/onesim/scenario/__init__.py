from .relations import (
    RelationGraph,
    sample_relations,
    sample_valid_relations,
    validate_relations,
)
from .sampling import sample_profiles
from .schema import (
    AttrSpec,
    ProfileSchema,
    RelationRule,
    RelationSchema,
    SamplerSpec,
    load_profile_schema,
    load_relation_schema,
)

__all__ = [
    "AttrSpec",
    "ProfileSchema",
    "RelationGraph",
    "RelationRule",
    "RelationSchema",
    "SamplerSpec",
    "load_profile_schema",
    "load_relation_schema",
    "sample_profiles",
    "sample_relations",
    "sample_valid_relations",
    "validate_relations",
]
