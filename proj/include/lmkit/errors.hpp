/**
 * Copyright 2026 lmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace lmkit {

/// Base class for all lmkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateInput : public Error {
public:
  using Error::Error;
};

class NonInvertible : public Error {
public:
  using Error::Error;
};

class InvalidSize : public Error {
public:
  using Error::Error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class InvalidStrategy : public Error {
public:
  using Error::Error;
};

class CountMismatch : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

class BadFlipMap : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace lmkit
