/**
 * Keyboard-first annotation queue.
 *
 * One key per class, immediate POST, optimistic advance to the next frame;
 * failed POSTs return to the queue with a visible error badge and can be
 * retried. Throughput is the point: the reviewer never waits on the network.
 */

import type { ReviewApi } from "./api.js";
import type { SixClassLabel } from "./schema.js";
import { SIX_CLASSES } from "./schema.js";

export const KEY_BINDINGS: Record<string, SixClassLabel> = {
  "1": "LCA_better",
  "2": "LCA_bad",
  "3": "LCA_other",
  "4": "RCA_better",
  "5": "RCA_bad",
  "6": "RCA_other",
};

export interface QueueItem {
  caseId: string;
  videoId: string;
  frameIndex: number;
}

export interface FailedItem {
  item: QueueItem;
  label: SixClassLabel;
  error: string;
}

export interface Progress {
  total: number;
  done: number;
  pending: number;
  failed: number;
}

export class AnnotateFlow {
  private queue: QueueItem[];
  private readonly total: number;
  private done = 0;
  readonly failed: FailedItem[] = [];
  private inFlight: Promise<void>[] = [];

  constructor(
    private readonly api: ReviewApi,
    items: QueueItem[],
    private readonly resolving = false,
  ) {
    this.queue = [...items];
    this.total = items.length;
  }

  current(): QueueItem | undefined {
    return this.queue[0];
  }

  /**
   * Handle one keypress. Unknown keys are ignored (returns null); a bound
   * key labels the current frame, advances immediately, and posts in the
   * background.
   */
  pressKey(key: string): SixClassLabel | null {
    const label = KEY_BINDINGS[key];
    if (!label || this.queue.length === 0) return null;
    const item = this.queue.shift()!;
    this.post(item, label);
    return label;
  }

  retryFailed(): void {
    const retry = this.failed.splice(0, this.failed.length);
    for (const entry of retry) {
      this.post(entry.item, entry.label);
    }
  }

  /** Resolve once every in-flight POST has settled. */
  async flush(): Promise<void> {
    while (this.inFlight.length > 0) {
      const batch = this.inFlight;
      this.inFlight = [];
      await Promise.allSettled(batch);
    }
  }

  progress(): Progress {
    return {
      total: this.total,
      done: this.done,
      pending: this.queue.length,
      failed: this.failed.length,
    };
  }

  private post(item: QueueItem, label: SixClassLabel): void {
    const body = {
      video_id: item.videoId,
      frame_index: item.frameIndex,
      label,
      ...(this.resolving ? { resolving: true } : {}),
    };
    const task = this.api
      .postAnnotation(body)
      .then(() => {
        this.done += 1;
      })
      .catch((err: unknown) => {
        this.failed.push({
          item,
          label,
          error: err instanceof Error ? err.message : String(err),
        });
      });
    this.inFlight.push(task);
  }
}

export function keyLegend(): Array<{ key: string; label: SixClassLabel }> {
  return SIX_CLASSES.map((label, index) => ({
    key: String(index + 1),
    label,
  }));
}
