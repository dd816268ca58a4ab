"""Output management for command results."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import json
import logging
import time
from datetime import datetime
from pathlib import Path

from multicorr.helper.naming import round_floats

lgr = logging.getLogger(__name__)


class Output_Manager:
    """
    Manage output saving with consistent paths, metadata, and overwrite handling.

    Every saved file gets a sidecar JSON with provenance metadata, existing
    files are handled according to ``config.overwrite_mode`` and saving can
    optionally be timed.

    Parameters
    ----------
    config : Config
        Configuration object containing output settings.
    command : str
        The command that produced the output, used to prefix file names.
    command_description : str, optional
        Description of the command for metadata.
    """

    def __init__(self, config, command, command_description=""):
        """Initialize the Output_Manager."""
        self.config = config
        self.command = command
        self.command_description = command_description

    def _get_overwrite_mode(self):
        """Get the overwrite mode from config."""
        return getattr(self.config, "overwrite_mode", "never")

    def _should_overwrite(self, filepath):
        """
        Check if a file should be overwritten based on config.overwrite_mode.

        Parameters
        ----------
        filepath : str or Path
            Path to the file to check.

        Returns
        -------
        bool
            True if file should be overwritten, False otherwise.
        """
        filepath = Path(filepath)

        if not filepath.exists():
            return True

        mode = self._get_overwrite_mode()

        if mode == "always":
            return True
        elif mode == "never":
            lgr.info(
                "File %s already exists. Skipping (overwrite_mode='never').", filepath
            )
            return False
        elif mode == "ask":
            response = self.config.ask(
                f"File {filepath} exists. Overwrite? (y/n)", default="n"
            )
            return response.lower() in ["y", "yes"]
        elif mode == "ifnewer":
            lgr.info(
                "File %s already exists. Skipping "
                "(overwrite_mode='ifnewer', no source to compare).",
                filepath,
            )
            return False
        else:
            lgr.warning("Unknown overwrite_mode '%s', defaulting to 'never'.", mode)
            return False

    def _should_overwrite_ifnewer(self, filepath, source_file):
        """
        Check if file should be overwritten based on modification time.

        Parameters
        ----------
        filepath : str or Path
            Path to the output file.
        source_file : str or Path
            Path to the source document (state or scenario file).

        Returns
        -------
        bool
            True if source is newer than output or output doesn't exist.
        """
        filepath = Path(filepath)
        source_file = Path(source_file)

        if not filepath.exists():
            return True

        if not source_file.exists():
            lgr.warning(
                "Source file %s does not exist. Cannot compare dates.", source_file
            )
            return False

        if source_file.stat().st_mtime > filepath.stat().st_mtime:
            return True
        lgr.info("File %s is up to date. Skipping.", filepath)
        return False

    def _create_output_path(self, name, extension=None, custom_dir=None):
        """
        Create an output file path.

        Parameters
        ----------
        name : str
            Output name or an explicit file path. A bare name becomes
            ``<custom_dir>/<command>_<name><extension>``.
        extension : str, optional
            File extension (e.g. ".csv", ".json").
        custom_dir : str or Path, optional
            Directory for bare names, by default the working directory.

        Returns
        -------
        Path
            Output file path.
        """
        path = Path(name)
        if path.parent != Path(".") or path.suffix:
            return path

        filename = name if name.startswith(self.command) else f"{self.command}_{name}"
        if extension:
            filename += extension
        base_dir = Path(custom_dir) if custom_dir else Path.cwd()
        return base_dir / filename

    def _create_sidecar_metadata(
        self, output_path, custom_metadata=None, timing_info=None, file_size=None
    ):
        """
        Create sidecar JSON metadata.

        Parameters
        ----------
        output_path : str or Path
            Path to the output file.
        custom_metadata : dict, optional
            Custom metadata to merge into sidecar.
        timing_info : dict, optional
            Timing information (e.g., {'Duration': '0.012s'}).
        file_size : int, optional
            File size in bytes.

        Returns
        -------
        dict
            Metadata dictionary.
        """
        metadata = {
            "Toolkit": {
                "Version": self.config.get_version(),
                "Command": self.command,
                "CommandDescription": self.command_description,
                "OutputFile": str(Path(output_path).name),
                "GeneratedAt": datetime.now().isoformat(),
            }
        }

        if timing_info or file_size:
            metadata["Performance"] = {}
            if timing_info:
                metadata["Performance"].update(timing_info)
            if file_size:
                metadata["Performance"]["FileSizeBytes"] = file_size

        if custom_metadata:
            metadata.update(custom_metadata)

        return metadata

    def _save_sidecar(self, output_path, metadata):
        """
        Save sidecar JSON file next to the output.

        A JSON output gets a ``.sidecar.json`` file instead of overwriting
        itself.
        """
        if not getattr(self.config, "sidecar_auto_generate", True):
            return

        output_path = Path(output_path)
        if output_path.suffix == ".json":
            sidecar_path = output_path.with_suffix(".sidecar.json")
        else:
            sidecar_path = output_path.with_suffix(".json")

        sidecar_path.parent.mkdir(parents=True, exist_ok=True)

        with open(sidecar_path, "w") as f:
            json.dump(metadata, f, indent=4)

        lgr.debug("Saved sidecar: %s", sidecar_path)

    def save_generic(
        self,
        obj,
        name,
        save_func,
        extension=None,
        custom_dir=None,
        metadata=None,
        source_file=None,
        **kwargs,
    ):
        """
        Save any output type with consistent metadata and overwrite handling.

        Parameters
        ----------
        obj : object
            Object to save.
        name : str
            Output name or path.
        save_func : callable
            Function called as ``save_func(path, **kwargs)``.
        extension : str, optional
            File extension.
        custom_dir : str or Path, optional
            Custom output directory.
        metadata : dict, optional
            Custom metadata for sidecar.
        source_file : str or Path, optional
            Source file for ifnewer comparison.
        **kwargs : dict
            Additional arguments passed to save_func.

        Returns
        -------
        Path
            Path to saved file.
        """
        output_path = self._create_output_path(
            name, extension=extension, custom_dir=custom_dir
        )

        if self._get_overwrite_mode() == "ifnewer" and source_file:
            should_save = self._should_overwrite_ifnewer(output_path, source_file)
        else:
            should_save = self._should_overwrite(output_path)

        if not should_save:
            return output_path

        output_path.parent.mkdir(parents=True, exist_ok=True)

        timing_info = None
        if getattr(self.config, "output_profiling", False):
            start_time = time.time()

        save_func(output_path, **kwargs)
        lgr.info("Saved: %s", output_path)

        if getattr(self.config, "output_profiling", False):
            duration = time.time() - start_time
            timing_info = {
                "Duration": f"{duration:.3f}s",
                "Timestamp": datetime.now().isoformat(),
            }

        file_size = output_path.stat().st_size if output_path.exists() else None

        sidecar_metadata = self._create_sidecar_metadata(
            output_path,
            custom_metadata=metadata,
            timing_info=timing_info,
            file_size=file_size,
        )
        self._save_sidecar(output_path, sidecar_metadata)

        return output_path

    def get_output_path(self, name, extension=None, custom_dir=None):
        """Get output path without saving."""
        return self._create_output_path(
            name, extension=extension, custom_dir=custom_dir
        )

    def save_dataframe(
        self, df, name, format="csv", metadata=None, source_file=None, **kwargs
    ):
        """
        Save a pandas DataFrame as CSV or TSV.

        Parameters
        ----------
        df : pandas.DataFrame
            DataFrame to save.
        name : str
            Output name or path.
        format : str, optional
            Format: "csv" or "tsv". Default is "csv".
        metadata : dict, optional
            Custom metadata for sidecar.
        source_file : str or Path, optional
            Source file for ifnewer comparison.
        **kwargs : dict
            Additional arguments for ``DataFrame.to_csv``.

        Returns
        -------
        Path
            Path to saved file.
        """
        digits = getattr(self.config, "significant_digits", 12)
        kwargs.setdefault("index", False)
        kwargs.setdefault("float_format", f"%.{digits}g")

        format_map = {"csv": (".csv", ","), "tsv": (".tsv", "\t")}
        if format not in format_map:
            raise ValueError(
                f"Unsupported format '{format}'. "
                f"Supported: {list(format_map.keys())}"
            )
        extension, sep = format_map[format]

        def save_func(path, **kw):
            df.to_csv(path, sep=sep, **kw)

        return self.save_generic(
            df,
            name,
            save_func,
            extension=extension,
            metadata=metadata,
            source_file=source_file,
            **kwargs,
        )

    def save_json(self, data, name, metadata=None, source_file=None, **kwargs):
        """
        Save data as JSON file with floats rounded to significant digits.

        Parameters
        ----------
        data : dict or list
            Data to save as JSON.
        name : str
            Output name or path.
        metadata : dict, optional
            Custom metadata for sidecar.
        source_file : str or Path, optional
            Source file for ifnewer comparison.
        **kwargs : dict
            Additional arguments for json.dump, like indent.

        Returns
        -------
        Path
            Path to saved file.
        """
        digits = getattr(self.config, "significant_digits", 12)
        data = round_floats(data, digits)

        def save_func(path, **json_kwargs):
            if "indent" not in json_kwargs:
                json_kwargs["indent"] = 4
            with open(path, "w") as f:
                json.dump(data, f, **json_kwargs)
                f.write("\n")

        return self.save_generic(
            data,
            name,
            save_func,
            extension=".json",
            metadata=metadata,
            source_file=source_file,
            **kwargs,
        )

    def save_text(self, text, name, metadata=None, source_file=None, **kwargs):
        """
        Save text content to a file.

        Parameters
        ----------
        text : str
            Text content to save.
        name : str
            Output name or path.
        metadata : dict, optional
            Custom metadata for sidecar.
        source_file : str or Path, optional
            Source file for ifnewer comparison.
        **kwargs : dict
            ``extension`` (default ".txt") and ``encoding``.

        Returns
        -------
        Path
            Path to saved file.
        """
        extension = kwargs.pop("extension", ".txt")

        def save_func(path, **write_kwargs):
            encoding = write_kwargs.pop("encoding", "utf-8")
            with open(path, "w", encoding=encoding) as f:
                f.write(text)

        return self.save_generic(
            text,
            name,
            save_func,
            extension=extension,
            metadata=metadata,
            source_file=source_file,
            **kwargs,
        )
