from .assembly import (TableRow, build_block, build_connector, build_multi_telescope, build_telescope,
                       expected_piece, smooth_origin)
from .layout import Layout, multi_layouts, triple_layout
from .models import ModelIParams, build_model_I, build_model_II
from .types import (ConstructionConstants, ConstructionError, ConstructionLog, PatternError, SearchPolicy,
                    TelescopeStage)

__all__ = ["build_model_I", "build_model_II", "build_block", "build_connector", "smooth_origin",
           "build_telescope", "build_multi_telescope", "ConstructionConstants", "ConstructionError",
           "ConstructionLog", "PatternError", "SearchPolicy", "TelescopeStage", "Layout", "triple_layout",
           "multi_layouts", "ModelIParams", "TableRow", "expected_piece"]
