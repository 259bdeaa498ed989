/**
 * Wire types for the review service plus client-side validation that
 * mirrors the service's rules exactly, so bad input is blocked before the
 * POST ever leaves the browser.
 */

export const SIX_CLASSES = [
  "LCA_better",
  "LCA_bad",
  "LCA_other",
  "RCA_better",
  "RCA_bad",
  "RCA_other",
] as const;

export type SixClassLabel = (typeof SIX_CLASSES)[number];

export const ERROR_FLAGS = [
  "laterality_error",
  "vessel_error",
  "treatment_error",
  "logical_error",
  "stenosis_error",
] as const;

export type ErrorFlag = (typeof ERROR_FLAGS)[number];

export interface AnnotationBody {
  video_id: string;
  frame_index: number;
  label: SixClassLabel;
  annotator_id?: string;
  resolving?: boolean;
}

export interface ReviewBody {
  case_id: string;
  model_id: string;
  overall: number;
  reviewer_id?: string;
  comment?: string;
  laterality_error: boolean;
  vessel_error: boolean;
  treatment_error: boolean;
  logical_error: boolean;
  stenosis_error: boolean;
}

export interface CaseSummary {
  case_id: string;
  exam_id: string;
  video_id: string;
  frame_index: number;
  laterality: string;
  complete: boolean;
  split: string;
  models: string[];
}

export interface CorpusRecordPayload {
  exam_id: string;
  video_id: string;
  frame_index: number;
  image_ref: string;
  laterality: string;
  report_jp: string;
  report_en: string;
  gt_summary_jp: string;
  gt_summary_en: string;
  generated: Record<string, { text_jp?: string; text_en?: string }>;
  complete: boolean;
}

export interface AnnotationPayload {
  video_id: string;
  frame_index: number;
  annotator_id: string;
  label: string;
  timestamp: string;
  resolving: boolean;
  revision: number;
}

export interface ReviewPayload {
  case_id: string;
  reviewer_id: string;
  model_id: string;
  overall: number;
  comment: string;
  timestamp: string;
  revision: number;
  laterality_error: boolean;
  vessel_error: boolean;
  treatment_error: boolean;
  logical_error: boolean;
  stenosis_error: boolean;
}

export interface CaseDetail {
  case_id: string;
  split: string;
  frame_url: string;
  record: CorpusRecordPayload;
  annotations: AnnotationPayload[];
  reviews: ReviewPayload[];
}

export interface Conflict {
  video_id: string;
  frame_index: number;
  labels: Record<string, string>;
}

export interface ReviewTable {
  headers: string[];
  rows: Array<Record<string, string | number>>;
}

export interface ServiceError {
  code: string;
  field?: string;
  message: string;
}

/** Field name of the first violated rule, or null when the body is valid. */
export function validateAnnotation(body: AnnotationBody): string | null {
  if (!body.video_id) return "video_id";
  if (!Number.isInteger(body.frame_index) || body.frame_index < 0) {
    return "frame_index";
  }
  if (!(SIX_CLASSES as readonly string[]).includes(body.label)) return "label";
  if (body.resolving !== undefined && typeof body.resolving !== "boolean") {
    return "resolving";
  }
  return null;
}

export function validateReview(body: ReviewBody): string | null {
  if (!body.case_id) return "case_id";
  if (!body.model_id) return "model_id";
  if (!Number.isInteger(body.overall) || body.overall < 0 || body.overall > 10) {
    return "overall";
  }
  for (const flag of ERROR_FLAGS) {
    if (typeof body[flag] !== "boolean") return flag;
  }
  if (body.comment !== undefined && typeof body.comment !== "string") {
    return "comment";
  }
  return null;
}
