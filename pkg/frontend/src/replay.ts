/**
 * Live run replay: a cursor over streamed tick records with play/pause/seek,
 * click-to-mark annotation (rendered as an X), and the caption line pinned
 * to the latest narration at or before the cursor.
 */
import { captionAt, TimedText } from "./captions.js";
import type { TickRecord, Workspace } from "./schema.js";
import { FieldTransform, CanvasSize } from "./transform.js";

/** The 2D-context subset the renderer needs; tests pass a recording fake. */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export interface Mark {
  tick: number;
  x: number;
  y: number;
}

export class ReplayView {
  readonly transform: FieldTransform;
  private records: TickRecord[] = [];
  private cursorIndex = -1;
  private playing = true;
  private readonly marks: Mark[] = [];
  private readonly speaks: TimedText[] = [];

  constructor(
    private readonly workspace: Workspace,
    readonly canvas: CanvasSize,
  ) {
    this.transform = new FieldTransform(workspace, canvas);
  }

  /** Append a streamed record; while playing the cursor follows the stream. */
  push(record: TickRecord): void {
    this.records.push(record);
    for (const speak of record.speaks) {
      this.speaks.push({ tick: record.tick, text: speak.text });
    }
    if (this.playing || this.cursorIndex < 0) {
      this.cursorIndex = this.records.length - 1;
    }
  }

  play(): void {
    this.playing = true;
    this.cursorIndex = this.records.length - 1;
  }

  pause(): number {
    this.playing = false;
    return this.cursor();
  }

  isPaused(): boolean {
    return !this.playing;
  }

  /** Move the cursor to the record at or after the requested tick. */
  seek(tick: number): number {
    if (this.records.length === 0) return -1;
    let index = this.records.findIndex((r) => r.tick >= tick);
    if (index < 0) index = this.records.length - 1;
    this.cursorIndex = index;
    this.playing = false;
    return this.cursor();
  }

  cursor(): number {
    const rec = this.records[this.cursorIndex];
    return rec ? rec.tick : -1;
  }

  current(): TickRecord | null {
    return this.records[this.cursorIndex] ?? null;
  }

  caption(): string | null {
    return captionAt(this.speaks, this.cursor());
  }

  /**
   * Annotate the field at a canvas point; returns the field coordinates.
   * Clicks outside the field are rejected client-side.
   */
  placeMark(px: number, py: number): [number, number] {
    if (!this.transform.hits(px, py)) {
      throw new Error("mark outside the field");
    }
    const [x, y] = this.transform.toField(px, py);
    this.marks.push({ tick: Math.max(0, this.cursor()), x, y });
    return [x, y];
  }

  allMarks(): readonly Mark[] {
    return this.marks;
  }

  render(ctx: Draw2D): void {
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const [left, top] = this.transform.toCanvas(this.workspace.x_min, this.workspace.y_max);
    const [right, bottom] = this.transform.toCanvas(this.workspace.x_max, this.workspace.y_min);
    ctx.strokeStyle = "#3a7d3a";
    ctx.lineWidth = 2;
    ctx.strokeRect(left, top, right - left, bottom - top);
    for (const goal of this.workspace.goals) {
      const [gx, gy] = this.transform.toCanvas(goal.x_min, goal.y_max);
      const [gx2, gy2] = this.transform.toCanvas(goal.x_max, goal.y_min);
      ctx.strokeRect(gx, gy, gx2 - gx, gy2 - gy);
    }
    const record = this.current();
    if (record) {
      for (const [eid, [x, y]] of Object.entries(record.state.positions)) {
        const [px, py] = this.transform.toCanvas(x, y);
        ctx.beginPath();
        ctx.fillStyle = eid === record.state.possession ? "#ffd166" : "#4a6fa5";
        ctx.arc(px, py, eid === "ball" ? 3 : 7, 0, Math.PI * 2);
        ctx.fill();
        ctx.fillText(eid, px + 9, py - 9);
      }
    }
    ctx.strokeStyle = "#d64545";
    ctx.lineWidth = 2;
    for (const mark of this.marks) {
      const [px, py] = this.transform.toCanvas(mark.x, mark.y);
      ctx.beginPath();
      ctx.moveTo(px - 6, py - 6);
      ctx.lineTo(px + 6, py + 6);
      ctx.moveTo(px + 6, py - 6);
      ctx.lineTo(px - 6, py + 6);
      ctx.stroke();
    }
    const caption = this.caption();
    if (caption) {
      ctx.fillStyle = "#111";
      ctx.fillText(caption, 12, height - 12);
    }
  }
}
