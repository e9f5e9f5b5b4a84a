# Empty file to make the directory a package
