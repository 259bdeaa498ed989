/**
 * Case view model: a direct, read-only projection of the service payload.
 * Clinical text is never rewritten client-side; every displayed string is
 * one of the payload's fields.
 */

import type { AnnotationPayload, CaseDetail, ReviewPayload } from "./schema.js";

export type Language = "jp" | "en";

export interface GeneratedView {
  modelId: string;
  text_jp: string;
  text_en: string;
}

export interface CaseView {
  caseId: string;
  split: string;
  frameUrl: string;
  examId: string;
  videoId: string;
  frameIndex: number;
  laterality: string;
  complete: boolean;
  report: Record<Language, string>;
  summary: Record<Language, string>;
  generated: GeneratedView[];
  myAnnotation?: AnnotationPayload;
  myReviews: ReviewPayload[];
}

export function buildCaseView(detail: CaseDetail, reviewerId: string): CaseView {
  const record = detail.record;
  const generated: GeneratedView[] = Object.keys(record.generated)
    .sort()
    .map((modelId) => ({
      modelId,
      text_jp: record.generated[modelId]?.text_jp ?? "",
      text_en: record.generated[modelId]?.text_en ?? "",
    }));
  return {
    caseId: detail.case_id,
    split: detail.split,
    frameUrl: detail.frame_url,
    examId: record.exam_id,
    videoId: record.video_id,
    frameIndex: record.frame_index,
    laterality: record.laterality,
    complete: record.complete,
    report: { jp: record.report_jp, en: record.report_en },
    summary: { jp: record.gt_summary_jp, en: record.gt_summary_en },
    generated,
    myAnnotation: detail.annotations.find((a) => a.annotator_id === reviewerId),
    myReviews: detail.reviews.filter((r) => r.reviewer_id === reviewerId),
  };
}

export function generatedText(view: GeneratedView, lang: Language): string {
  return lang === "jp" ? view.text_jp : view.text_en;
}
