/** Display-to-submit stopwatch that ignores time spent in a hidden tab. */

export class ElapsedTimer {
  private accumulatedMs = 0;
  private runningSince: number | null = null;
  private readonly onVisibility: () => void;

  constructor(
    private readonly doc: Document = document,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.onVisibility = () => {
      if (this.doc.visibilityState === "hidden") {
        this.freeze();
      } else if (this.runningSince === null && this.started) {
        this.runningSince = this.now();
      }
    };
    this.doc.addEventListener("visibilitychange", this.onVisibility);
  }

  private started = false;

  /** (Re)start measuring from zero, e.g. when a new triple is shown. */
  restart(): void {
    this.accumulatedMs = 0;
    this.started = true;
    this.runningSince = this.doc.visibilityState === "hidden" ? null : this.now();
  }

  private freeze(): void {
    if (this.runningSince !== null) {
      this.accumulatedMs += this.now() - this.runningSince;
      this.runningSince = null;
    }
  }

  elapsedSeconds(): number {
    const live = this.runningSince === null ? 0 : this.now() - this.runningSince;
    return (this.accumulatedMs + live) / 1000;
  }

  dispose(): void {
    this.doc.removeEventListener("visibilitychange", this.onVisibility);
  }
}
