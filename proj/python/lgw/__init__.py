"""Python access to the latent geometry toolkit."""

from ._lgw import (
    Dataset,
    arithmetic,
    beta_at,
    edit_value_for_branch,
    generate,
    guided_traverse,
    interpolate,
    kl_diag_gaussians,
    load_dataset,
    make_schema,
    metrics,
    pca_project,
    random_orthogonal,
    save_dataset,
)

__all__ = [
    "Dataset",
    "arithmetic",
    "beta_at",
    "edit_value_for_branch",
    "generate",
    "guided_traverse",
    "interpolate",
    "kl_diag_gaussians",
    "load_dataset",
    "make_schema",
    "metrics",
    "pca_project",
    "random_orthogonal",
    "save_dataset",
]
