/** Caption alignment: at any cursor, show the last narration line spoken at
 * or before it. */

export interface TimedText {
  tick: number;
  text: string;
}

export function captionAt(speaks: readonly TimedText[], cursor: number): string | null {
  let best: TimedText | null = null;
  for (const speak of speaks) {
    if (speak.tick <= cursor && (best === null || speak.tick >= best.tick)) {
      best = speak;
    }
  }
  return best ? best.text : null;
}
