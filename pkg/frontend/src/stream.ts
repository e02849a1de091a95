/** Server-sent event consumption with resume-on-reconnect.
 *
 * The subscription tracks the last event index it has seen; when the
 * underlying source drops, it reconnects from that index so no event is
 * lost or duplicated. The SSE wire parser is exposed for the fetch-based
 * transport used outside the browser. */

export interface SseMessage {
  id: number | null;
  event: string;
  data: string;
}

/** Incremental SSE parser: feed chunks, get completed messages back. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseMessage[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const messages: SseMessage[] = [];
    let split: number;
    while ((split = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      const message: SseMessage = { id: null, event: "message", data: "" };
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith("id:")) message.id = parseInt(line.slice(3).trim(), 10);
        else if (line.startsWith("event:")) message.event = line.slice(6).trim();
        else if (line.startsWith("data:")) dataLines.push(line.slice(5).trimStart());
      }
      message.data = dataLines.join("\n");
      if (block.trim() !== "") messages.push(message);
    }
    return messages;
  }
}

export interface StreamHandle {
  close(): void;
}

export interface SourceHandle {
  close(): void;
}

/** Opens a raw source for a URL; delivers parsed messages and an end signal. */
export type SourceFactory = (
  url: string,
  onMessage: (message: SseMessage) => void,
  onEnd: (error?: unknown) => void,
) => SourceHandle;

export interface SubscribeOptions {
  makeUrl: (fromIndex: number) => string;
  source: SourceFactory;
  onEvent: (message: SseMessage) => void;
  /** Called when the server closed the stream normally (run is terminal). */
  onClose?: () => void;
  reconnectDelayMs?: number;
  setTimeoutImpl?: (fn: () => void, ms: number) => unknown;
  /** Reconnect only while this returns true; a normal close stops. */
  shouldReconnect?: () => boolean;
}

/** Subscribe with auto-reconnect; resumes from the last seen event index. */
export function subscribe(options: SubscribeOptions): StreamHandle {
  const delay = options.reconnectDelayMs ?? 1000;
  const later = options.setTimeoutImpl ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
  let nextIndex = 0;
  let closed = false;
  let current: SourceHandle | null = null;

  const open = () => {
    if (closed) return;
    current = options.source(
      options.makeUrl(nextIndex),
      (message) => {
        if (message.id !== null && !Number.isNaN(message.id)) nextIndex = message.id + 1;
        options.onEvent(message);
      },
      (error) => {
        current = null;
        if (closed) return;
        if (error === undefined) {
          // clean end: the run reached a terminal phase and history is replayed
          options.onClose?.();
          return;
        }
        if (options.shouldReconnect && !options.shouldReconnect()) return;
        later(open, delay);
      },
    );
  };

  open();
  return {
    close() {
      closed = true;
      current?.close();
    },
  };
}

/** Browser transport: EventSource. Errors trigger the reconnect path. */
export function eventSourceFactory(EventSourceImpl: typeof EventSource): SourceFactory {
  return (url, onMessage, onEnd) => {
    const source = new EventSourceImpl(url);
    const forward = (event: MessageEvent, type: string) => {
      onMessage({
        id: event.lastEventId ? parseInt(event.lastEventId, 10) : null,
        event: type,
        data: String(event.data),
      });
    };
    for (const type of ["phase", "pipeline", "selection", "cast", "day", "outcome", "similarity", "command", "command_rejected", "command_queued", "message"]) {
      source.addEventListener(type, (event) => forward(event as MessageEvent, type));
    }
    source.onerror = () => {
      source.close();
      onEnd(new Error("stream disconnected"));
    };
    return { close: () => source.close() };
  };
}

/** fetch()-streaming transport, for tests and non-browser hosts. */
export function fetchSourceFactory(fetchImpl: (url: string) => Promise<Response>): SourceFactory {
  return (url, onMessage, onEnd) => {
    let cancelled = false;
    (async () => {
      try {
        const response = await fetchImpl(url);
        if (!response.ok || !response.body) throw new Error(`stream HTTP ${response.status}`);
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        while (!cancelled) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const message of parser.push(decoder.decode(value, { stream: true }))) {
            onMessage(message);
          }
        }
        onEnd(undefined);
      } catch (error) {
        if (!cancelled) onEnd(error);
      }
    })();
    return { close: () => { cancelled = true; } };
  };
}
