/**
 * Browser wiring: fetch the session, render the flow for annotation, replay
 * the latest run with pause/click-to-mark, and submit feedback for repair.
 * All state of record lives server-side; reloading rebuilds this view from
 * GETs alone.
 */
import { Client } from "./api.js";
import { FeedbackComposer } from "./feedback.js";
import { FlowView } from "./flowview.js";
import { ReplayView } from "./replay.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? "session-1";
  const client = new Client("");

  const session = await client.session(sessionId);
  const version = session.versions.at(-1);
  if (!version) {
    el("status").textContent = "session has no synthesized program yet";
    return;
  }
  const runId = session.runs.at(-1);
  el("status").textContent = `session ${session.id} · program ${version}` +
    (runId ? ` · run ${runId}` : "");

  // --- decision flow pane
  const flow = await client.flow(version);
  const flowView = new FlowView(flow);
  const flowPane = el("flow");
  const descPane = el("description");
  const flowComposer = new FeedbackComposer("flow");
  const redrawFlow = () => {
    flowPane.innerHTML = flowView.svg();
    for (const g of flowPane.querySelectorAll("[data-node]")) {
      g.addEventListener("click", () => {
        descPane.textContent = flowView.clickNode(g.getAttribute("data-node")!);
        redrawFlow();
      });
    }
    for (const line of flowPane.querySelectorAll("[data-edge]")) {
      line.addEventListener("click", () => {
        const [src, dst] = line.getAttribute("data-edge")!.split("->");
        descPane.textContent = flowView.clickEdge(src!, dst!);
        redrawFlow();
      });
    }
  };
  redrawFlow();

  // --- replay pane
  if (!runId) return;
  const canvas = el<HTMLCanvasElement>("pitch");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  const replay = new ReplayView(session.scenario.workspace, {
    width: canvas.width,
    height: canvas.height,
  });
  const execComposer = new FeedbackComposer("execution", runId);
  const redraw = () => {
    replay.render(ctx);
    el("caption").textContent = replay.caption() ?? "";
    el("tick").textContent = `tick ${replay.cursor()}`;
  };

  canvas.addEventListener("click", (event) => {
    const rect = canvas.getBoundingClientRect();
    try {
      replay.placeMark(event.clientX - rect.left, event.clientY - rect.top);
      redraw();
    } catch {
      /* click landed outside the field: ignored */
    }
  });
  el("pause").addEventListener("click", async () => {
    const tick = replay.pause();
    execComposer.pausedAt(tick);
    await client.control(runId, "pause");
    redraw();
  });
  el("resume").addEventListener("click", async () => {
    replay.play();
    await client.control(runId, "resume");
  });
  el("say").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    execComposer.say(input.value, Math.max(0, replay.cursor()));
    input.value = "";
  });
  el("send-flow-feedback").addEventListener("click", async () => {
    const text = el<HTMLTextAreaElement>("flow-comment").value;
    flowComposer.say(text, 0);
    await client.submitFeedback(runId, flowComposer.buildFlow(flowView));
    el("status").textContent = "flow feedback submitted";
  });
  el("send-exec-feedback").addEventListener("click", async () => {
    await client.submitFeedback(runId, execComposer.buildExecution(replay));
    el("status").textContent = "execution feedback submitted";
  });

  await client.streamRun(runId, (record) => {
    replay.push(record);
    redraw();
  });
}

boot().catch((err) => {
  el("status").textContent = String(err);
});
