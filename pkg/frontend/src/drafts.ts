// Wizard drafts survive a dropped connection or a closed tab: doctors
// filling the form mid-ward-round must never retype a case history.

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class DraftStore<T> {
  constructor(
    private readonly storage: StorageLike,
    private readonly prefix = 'medsync.draft',
  ) {}

  private key(owner: string): string {
    return `${this.prefix}.${owner}`;
  }

  save(owner: string, draft: T): void {
    this.storage.setItem(this.key(owner), JSON.stringify(draft));
  }

  load(owner: string): T | null {
    const raw = this.storage.getItem(this.key(owner));
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as T;
    } catch {
      // a corrupt draft is worth less than a clean start
      this.storage.removeItem(this.key(owner));
      return null;
    }
  }

  clear(owner: string): void {
    this.storage.removeItem(this.key(owner));
  }
}

/** Map-backed stand-in for localStorage in tests and non-browser hosts. */
export class MemoryStorage implements StorageLike {
  private readonly items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.has(key) ? (this.items.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }
}
