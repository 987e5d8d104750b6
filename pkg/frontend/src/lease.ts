/** One active tab per session: a localStorage lease with heartbeats.
 * The second tab opening the same session sees a fresh foreign lease and
 * drops to read-only. Browser-local only; the server stays authoritative
 * for data either way.
 */

const STALE_MS = 10_000;
const BEAT_MS = 3_000;

interface LeaseRecord {
  token: string;
  beat: number;
}

export class SessionLease {
  private readonly key: string;
  private readonly token: string;
  private interval: ReturnType<typeof setInterval> | null = null;

  constructor(
    sessionId: string,
    private readonly storage: Storage = localStorage,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.key = `linkaudit-lease-${sessionId}`;
    this.token = Math.random().toString(36).slice(2);
  }

  private read(): LeaseRecord | null {
    const raw = this.storage.getItem(this.key);
    if (!raw) return null;
    try {
      return JSON.parse(raw) as LeaseRecord;
    } catch {
      return null;
    }
  }

  /** Try to take the lease; false means another live tab holds it. */
  acquire(): boolean {
    const existing = this.read();
    if (existing && existing.token !== this.token && this.now() - existing.beat < STALE_MS) {
      return false;
    }
    this.beat();
    this.interval = setInterval(() => this.beat(), BEAT_MS);
    return true;
  }

  private beat(): void {
    this.storage.setItem(this.key, JSON.stringify({ token: this.token, beat: this.now() }));
  }

  release(): void {
    if (this.interval !== null) clearInterval(this.interval);
    this.interval = null;
    const existing = this.read();
    if (existing && existing.token === this.token) {
      this.storage.removeItem(this.key);
    }
  }
}
