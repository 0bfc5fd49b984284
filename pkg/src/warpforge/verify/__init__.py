from .audit import (AuditItem, BoundaryCondition, BoundaryReport, StepAuditReport, TableCheck, check_table,
                    step_inequality_audit, verify_boundary_conditions)
from .certificate import (Cell, CertifyPolicy, CurvatureCertificate, cell_lower_bounds, certify,
                          verify_nonneg_ricci, worker_count)
from .samples import log_grid, sample_row, sample_table, to_csv
from .windows import ConeWindowReport, combine_psi, cone_window_scan, window_deviations

__all__ = ["Cell", "CertifyPolicy", "CurvatureCertificate", "cell_lower_bounds", "certify", "verify_nonneg_ricci",
           "worker_count", "AuditItem", "StepAuditReport", "step_inequality_audit", "BoundaryCondition",
           "BoundaryReport", "verify_boundary_conditions", "TableCheck", "check_table", "ConeWindowReport",
           "combine_psi", "cone_window_scan", "window_deviations", "log_grid", "sample_row", "sample_table",
           "to_csv"]
