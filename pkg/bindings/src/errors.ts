/** Input rejected before anything touched the metrics engine. */
export class BindingValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BindingValidationError";
  }
}

/** The metrics CLI was launched but did not exit cleanly. */
export class CliRunError extends Error {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, exitCode: number | null, stderr: string) {
    super(message);
    this.name = "CliRunError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}
