/**
 * stdio and TCP line transports. stdio serves the spawning client; TCP
 * accepts any number of connections, each with its own session (model data
 * is shared read-only). One request is processed at a time per connection.
 */

import { createInterface } from 'readline';
import * as net from 'net';

import { Checkpoint, Mode } from './checkpoint';
import { AdapterSession } from './session';

function attach(
  session: AdapterSession,
  input: NodeJS.ReadableStream,
  write: (line: string) => void,
  onFatal: (error: Error) => void,
): void {
  write(JSON.stringify(session.hello()));
  const reader = createInterface({ input, terminal: false });
  reader.on('line', (line) => {
    if (!line.trim()) return;
    try {
      write(JSON.stringify(session.handleLine(line)));
    } catch (error) {
      write(JSON.stringify({ type: 'error', message: String(error) }));
      onFatal(error as Error);
    }
  });
}

export function serveStdio(checkpoint: Checkpoint, mode: Mode): void {
  const session = new AdapterSession(checkpoint, mode);
  attach(
    session,
    process.stdin,
    (line) => process.stdout.write(line + '\n'),
    () => process.exit(1),
  );
}

export function serveTcp(
  checkpoint: Checkpoint,
  mode: Mode,
  port: number,
  onListening?: (port: number) => void,
): net.Server {
  const server = net.createServer((socket) => {
    const session = new AdapterSession(checkpoint, mode);
    attach(
      session,
      socket,
      (line) => socket.write(line + '\n'),
      () => socket.destroy(),
    );
    socket.on('error', () => socket.destroy());
  });
  server.listen(port, '127.0.0.1', () => {
    const address = server.address() as net.AddressInfo;
    if (onListening) onListening(address.port);
  });
  return server;
}
