/**
 * DOM shell: wires the API client, annotation queue, and score form into
 * index.html. All behavior lives in the imported modules; this file only
 * moves strings between them and the page.
 */

import { ApiError, ReviewApi } from "./api.js";
import { AnnotateFlow, keyLegend, type QueueItem } from "./annotate.js";
import { buildCaseView, type CaseView } from "./caseview.js";
import { ScoreForm } from "./score.js";
import { ERROR_FLAGS, type ErrorFlag } from "./schema.js";

const FLAG_TITLES: Record<ErrorFlag, string> = {
  laterality_error: "Laterality error",
  vessel_error: "Vessel numbering error",
  treatment_error: "Treatment plan error",
  logical_error: "Logical consistency error",
  stenosis_error: "Stenosis detection error",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private api!: ReviewApi;
  private reviewerId = "";
  private cases: QueueItem[] = [];
  private flow?: AnnotateFlow;
  private view?: CaseView;
  private form?: ScoreForm;

  async connect(): Promise<void> {
    const base = (el<HTMLInputElement>("base-url").value || "/v1").trim();
    const token = el<HTMLInputElement>("token").value.trim();
    this.reviewerId = el<HTMLInputElement>("reviewer").value.trim();
    this.api = new ReviewApi({ baseUrl: base, token });
    const split = el<HTMLSelectElement>("split").value;
    const summaries = await this.api.listCases(split || undefined);
    this.cases = summaries.map((c) => ({
      caseId: c.case_id,
      videoId: c.video_id,
      frameIndex: c.frame_index,
    }));
    this.flow = new AnnotateFlow(this.api, this.cases);
    el<HTMLElement>("legend").textContent = keyLegend()
      .map((b) => `${b.key}=${b.label}`)
      .join("   ");
    await this.showCurrent();
    await this.refreshConflicts();
  }

  private async showCurrent(): Promise<void> {
    const item = this.flow?.current();
    this.renderProgress();
    if (!item) {
      el<HTMLElement>("case-title").textContent = "queue empty";
      return;
    }
    const detail = await this.api.getCase(item.caseId);
    this.view = buildCaseView(detail, this.reviewerId);
    const modelId = this.view.generated[0]?.modelId ?? "";
    this.form = new ScoreForm(this.view, modelId, "jp");
    this.renderCase();
  }

  private renderCase(): void {
    const view = this.view;
    const form = this.form;
    if (!view || !form) return;
    el<HTMLElement>("case-title").textContent =
      `${view.caseId}  [${view.laterality}]  split=${view.split}`;
    el<HTMLImageElement>("frame").src = this.api.frameUrl(view.caseId);
    el<HTMLElement>("report").textContent = form.displayedReport();
    el<HTMLElement>("summary").textContent = form.displayedSummary();
    const generated = el<HTMLElement>("generated");
    generated.innerHTML = "";
    for (const g of view.generated) {
      const block = document.createElement("div");
      block.className = "generated-block";
      const pick = document.createElement("input");
      pick.type = "radio";
      pick.name = "model";
      pick.checked = g.modelId === form.modelId;
      pick.addEventListener("change", () => this.pickModel(g.modelId));
      const title = document.createElement("strong");
      title.textContent = g.modelId;
      const text = document.createElement("p");
      text.textContent =
        form.language === "jp" ? g.text_jp || "(no JP text)" : g.text_en || "(no EN text)";
      block.append(pick, title, text);
      generated.append(block);
    }
    el<HTMLInputElement>("overall").value = String(form.overall);
    el<HTMLElement>("overall-value").textContent = String(form.overall);
    const flags = el<HTMLElement>("flags");
    flags.innerHTML = "";
    for (const flag of ERROR_FLAGS) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = form.flags[flag];
      box.addEventListener("change", () => form.toggleFlag(flag));
      label.append(box, ` ${FLAG_TITLES[flag]}`);
      flags.append(label);
    }
    el<HTMLElement>("lang-label").textContent = form.language.toUpperCase();
  }

  private pickModel(modelId: string): void {
    if (!this.view || !this.form) return;
    const form = new ScoreForm(this.view, modelId, this.form.language);
    form.overall = this.form.overall;
    this.form = form;
    this.renderCase();
  }

  private renderProgress(): void {
    const p = this.flow?.progress();
    if (!p) return;
    el<HTMLElement>("progress").textContent =
      `${p.done}/${p.total} done, ${p.pending} pending, ${p.failed} failed`;
    const failed = el<HTMLElement>("failed");
    failed.innerHTML = "";
    for (const f of this.flow!.failed) {
      const row = document.createElement("li");
      row.textContent = `${f.item.caseId} ${f.label}: ${f.error}`;
      failed.append(row);
    }
  }

  async keydown(event: KeyboardEvent): Promise<void> {
    if (!this.flow) return;
    if (event.key === "l") {
      if (this.form) {
        this.form.toggleLanguage();
        this.renderCase();
      }
      return;
    }
    if (event.key === "r") {
      this.flow.retryFailed();
      this.renderProgress();
      return;
    }
    const label = this.flow.pressKey(event.key);
    if (label) {
      await this.showCurrent();
      void this.flow.flush().then(() => this.renderProgress());
    }
  }

  async submitScore(): Promise<void> {
    if (!this.form) return;
    const status = el<HTMLElement>("score-status");
    const value = Number(el<HTMLInputElement>("overall").value);
    if (!this.form.setOverall(value)) {
      status.textContent = "overall must be an integer 0-10";
      return;
    }
    try {
      const { revision } = await this.form.submit(this.api);
      status.textContent = `saved (revision ${revision})`;
      this.flow?.pressKey; // keep queue position; scoring does not advance
    } catch (err) {
      status.textContent =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
  }

  async refreshConflicts(): Promise<void> {
    const conflicts = await this.api.conflicts();
    const list = el<HTMLElement>("conflicts");
    list.innerHTML = "";
    for (const c of conflicts) {
      const row = document.createElement("li");
      row.textContent = `${c.video_id}#${c.frame_index}: ` +
        Object.entries(c.labels).map(([who, what]) => `${who}=${what}`).join(", ");
      list.append(row);
    }
  }
}

const app = new App();
el<HTMLButtonElement>("connect").addEventListener("click", () => {
  void app.connect().catch((err) => {
    el<HTMLElement>("case-title").textContent = String(err);
  });
});
el<HTMLButtonElement>("submit-score").addEventListener("click", () => {
  void app.submitScore();
});
document.addEventListener("keydown", (event) => {
  if ((event.target as HTMLElement)?.tagName === "INPUT") return;
  void app.keydown(event);
});
