/**
 * Report scoring form: 0-10 overall slider plus the five error checkboxes,
 * one form per (case, model). The JP/EN toggle swaps the displayed texts
 * from the already-fetched case payload; it never refetches or resubmits.
 */

import type { ReviewApi } from "./api.js";
import type { CaseView, Language } from "./caseview.js";
import { generatedText } from "./caseview.js";
import type { ErrorFlag, ReviewBody } from "./schema.js";
import { ERROR_FLAGS, validateReview } from "./schema.js";

export class ScoreForm {
  overall = 5;
  comment = "";
  language: Language;
  readonly flags: Record<ErrorFlag, boolean>;
  lastError: string | null = null;

  constructor(
    private readonly view: CaseView,
    readonly modelId: string,
    locale: Language = "jp",
  ) {
    this.language = locale;
    this.flags = {
      laterality_error: false,
      vessel_error: false,
      treatment_error: false,
      logical_error: false,
      stenosis_error: false,
    };
  }

  /** Reject out-of-range values outright; the slider never goes bad. */
  setOverall(value: number): boolean {
    if (!Number.isInteger(value) || value < 0 || value > 10) {
      this.lastError = "overall";
      return false;
    }
    this.overall = value;
    this.lastError = null;
    return true;
  }

  toggleFlag(flag: ErrorFlag): void {
    this.flags[flag] = !this.flags[flag];
  }

  toggleLanguage(): Language {
    this.language = this.language === "jp" ? "en" : "jp";
    return this.language;
  }

  displayedReport(): string {
    return this.view.report[this.language];
  }

  displayedSummary(): string {
    return this.view.summary[this.language];
  }

  displayedGenerated(): string {
    const entry = this.view.generated.find((g) => g.modelId === this.modelId);
    return entry ? generatedText(entry, this.language) : "";
  }

  body(): ReviewBody {
    const body: ReviewBody = {
      case_id: this.view.caseId,
      model_id: this.modelId,
      overall: this.overall,
      laterality_error: this.flags.laterality_error,
      vessel_error: this.flags.vessel_error,
      treatment_error: this.flags.treatment_error,
      logical_error: this.flags.logical_error,
      stenosis_error: this.flags.stenosis_error,
    };
    if (this.comment) body.comment = this.comment;
    return body;
  }

  canSubmit(): boolean {
    return validateReview(this.body()) === null;
  }

  async submit(api: ReviewApi): Promise<{ revision: number }> {
    const body = this.body();
    const bad = validateReview(body);
    if (bad) {
      this.lastError = bad;
      throw new Error(`invalid field: ${bad}`);
    }
    return api.postReview(body);
  }
}

export { ERROR_FLAGS };
